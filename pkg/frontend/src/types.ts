/** Shared types mirroring the gateway's admin API payloads. */

export interface ConsoleSettings {
  gatewayUrl: string;
  operatorId: string;
  pollIntervalMs: number;
}

export interface ReviewItem {
  id: string;
  sessionId: string;
  conflict: Record<string, unknown>;
  createdAt: number;
  status: string;
  resolvedBy: string | null;
  resolutionPolicyId: string | null;
  outcome: Record<string, unknown> | null;
}

export interface ValidationFinding {
  severity: string;
  path: string;
  message: string;
}

export interface ConflictFinding {
  severity: string;
  case: string;
  variant: string | null;
  policyA: string;
  policyB: string;
  dot: number | null;
  contexts: string[];
  message: string;
}

export interface ConflictScenario {
  context: string[];
  active: string[];
  variant: string | null;
}

export interface ConflictReport {
  blocking: boolean;
  exitStatus: number;
  findings: ConflictFinding[];
  scenarios: ConflictScenario[];
}

export interface AssistantSummary {
  id: string;
  conflictStrategy: string;
  inputPolicies: string[];
  outputPolicies: string[];
  upstreamMode: string;
  blockingConflicts: boolean;
}

export interface AuditRecord {
  timestamp: number;
  sessionId: string;
  direction: string;
  assistantId: string;
  verdictAction: string;
  triggeredRuleIds: string[];
  redactionCount: number;
  upstreamCalled: boolean;
  reviewId: string | null;
}

export type Decision = "allow" | "block" | "precedence";

export interface ResolveResult {
  review: ReviewItem;
  outcome: Record<string, unknown>;
}
