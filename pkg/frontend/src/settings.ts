/** Console settings: one JSON file with the gateway URL, operator id, and
 * polling interval. The interval may not go below one second. */

import type { ConsoleSettings } from "./types.js";

export const MIN_POLL_INTERVAL_MS = 1000;

export function parseSettings(raw: unknown): ConsoleSettings {
  if (typeof raw !== "object" || raw === null) {
    throw new Error("settings must be a JSON object");
  }
  const doc = raw as Record<string, unknown>;
  const gatewayUrl = doc.gatewayUrl;
  if (typeof gatewayUrl !== "string" || gatewayUrl.length === 0) {
    throw new Error("settings.gatewayUrl must be a non-empty string");
  }
  const operatorId = typeof doc.operatorId === "string" && doc.operatorId ? doc.operatorId : "operator";
  const interval = typeof doc.pollIntervalMs === "number" ? doc.pollIntervalMs : 2000;
  if (interval < MIN_POLL_INTERVAL_MS) {
    throw new Error(`pollIntervalMs must be >= ${MIN_POLL_INTERVAL_MS}`);
  }
  return {
    gatewayUrl: gatewayUrl.replace(/\/+$/, ""),
    operatorId,
    pollIntervalMs: interval,
  };
}
