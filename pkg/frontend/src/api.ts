/** Typed fetch client for the gateway's admin API.
 *
 * The console never evaluates policies itself: every piece of verdict or
 * analysis data shown in the UI comes from these endpoints.
 */

import type {
  AssistantSummary,
  AuditRecord,
  ConflictReport,
  Decision,
  ResolveResult,
  ReviewItem,
  ValidationFinding,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: unknown,
    message?: string,
  ) {
    super(message ?? `gateway returned HTTP ${status}`);
  }
}

export class GatewayClient {
  constructor(private readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    let body: unknown = null;
    const text = await response.text();
    if (text) {
      try {
        body = JSON.parse(text);
      } catch {
        body = text;
      }
    }
    if (!response.ok) {
      throw new ApiError(response.status, body);
    }
    return body as T;
  }

  health(): Promise<{ status: string; assistants: string[] }> {
    return this.request("/healthz");
  }

  listReviews(status?: string): Promise<ReviewItem[]> {
    const query = status ? `?status=${encodeURIComponent(status)}` : "";
    return this.request(`/admin/reviews${query}`);
  }

  getReview(id: string): Promise<ReviewItem> {
    return this.request(`/admin/reviews/${encodeURIComponent(id)}`);
  }

  resolveReview(
    id: string,
    decision: Decision,
    operatorId: string,
    policyId?: string,
  ): Promise<ResolveResult> {
    return this.request(`/admin/reviews/${encodeURIComponent(id)}/resolve`, {
      method: "POST",
      body: JSON.stringify({ decision, operatorId, policyId: policyId ?? null }),
    });
  }

  listAssistants(): Promise<AssistantSummary[]> {
    return this.request("/admin/assistants");
  }

  getConfig(): Promise<Record<string, unknown>> {
    return this.request("/admin/config");
  }

  replaceConfig(doc: unknown): Promise<{ status: string; findings: ValidationFinding[] }> {
    return this.request("/admin/assistants", {
      method: "POST",
      body: JSON.stringify(doc),
    });
  }

  validateConfig(
    doc: unknown,
  ): Promise<{ valid: boolean; findings: ValidationFinding[] }> {
    return this.request("/admin/assistants/validate", {
      method: "POST",
      body: JSON.stringify(doc),
    });
  }

  analyzeAssistant(id: string): Promise<ConflictReport> {
    return this.request(`/admin/assistants/${encodeURIComponent(id)}/analyze`, {
      method: "POST",
    });
  }

  auditRecords(session?: string): Promise<AuditRecord[]> {
    const query = session ? `?session=${encodeURIComponent(session)}` : "";
    return this.request(`/admin/audit${query}`);
  }
}
