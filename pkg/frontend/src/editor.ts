/** Policy/assistant editor model: load → edit → validate → save.
 *
 * The editor round-trips the deployment document losslessly (key order is
 * canonicalized, nothing else changes) and surfaces the gateway's
 * validation findings inline, including Case 1 deployment blockers. All
 * validation happens on the gateway.
 */

import { ApiError, GatewayClient } from "./api.js";
import type { ValidationFinding } from "./types.js";

/** JSON.stringify with recursively sorted object keys. */
export function canonicalJson(value: unknown, indent = 2): string {
  const sort = (node: unknown): unknown => {
    if (Array.isArray(node)) return node.map(sort);
    if (typeof node === "object" && node !== null) {
      const out: Record<string, unknown> = {};
      for (const key of Object.keys(node as Record<string, unknown>).sort()) {
        out[key] = sort((node as Record<string, unknown>)[key]);
      }
      return out;
    }
    return node;
  };
  return JSON.stringify(sort(value), null, indent);
}

export class EditorModel {
  text = "";
  findings: ValidationFinding[] = [];
  dirty = false;
  loadedDoc: Record<string, unknown> | null = null;

  constructor(private readonly client: GatewayClient) {}

  async load(): Promise<void> {
    this.loadedDoc = await this.client.getConfig();
    this.text = canonicalJson(this.loadedDoc);
    this.findings = [];
    this.dirty = false;
  }

  edit(text: string): void {
    this.text = text;
    this.dirty = true;
  }

  /** Parse the buffer; a syntax problem becomes a local error finding. */
  private parseBuffer(): Record<string, unknown> | null {
    try {
      return JSON.parse(this.text) as Record<string, unknown>;
    } catch (err) {
      this.findings = [
        { severity: "error", path: "$", message: `not valid JSON: ${String(err)}` },
      ];
      return null;
    }
  }

  async validate(): Promise<boolean> {
    const doc = this.parseBuffer();
    if (doc === null) return false;
    const result = await this.client.validateConfig(doc);
    this.findings = result.findings;
    return result.valid;
  }

  get blockers(): ValidationFinding[] {
    return this.findings.filter((f) => f.severity === "error");
  }

  async save(): Promise<boolean> {
    const doc = this.parseBuffer();
    if (doc === null) return false;
    try {
      const result = await this.client.replaceConfig(doc);
      this.findings = result.findings;
      this.dirty = false;
      this.loadedDoc = doc;
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        const body = err.body as { findings?: ValidationFinding[] };
        this.findings = body.findings ?? [];
        return false;
      }
      throw err;
    }
  }
}
