/** Conflict dashboard: a policy-by-policy matrix of pairwise dots and
 * case labels, built from the gateway's static-analysis report. Pairs the
 * report does not mention are no-conflict cells. */

import { GatewayClient } from "./api.js";
import type { ConflictFinding, ConflictReport } from "./types.js";

export interface MatrixCell {
  case: string;
  dot: number | null;
  variant: string | null;
  contexts: string[];
}

export interface ConflictMatrix {
  policies: string[];
  /** cells[i][j] describes the pair (policies[i], policies[j]); i < j mirrored. */
  cells: Record<string, Record<string, MatrixCell>>;
  blocking: boolean;
  scenarios: ConflictReport["scenarios"];
}

const NO_CONFLICT: MatrixCell = { case: "no-conflict", dot: null, variant: null, contexts: [] };

export function buildMatrix(policies: string[], findings: ConflictFinding[]): ConflictMatrix {
  const cells: Record<string, Record<string, MatrixCell>> = {};
  for (const a of policies) {
    cells[a] = {};
    for (const b of policies) {
      if (a !== b) cells[a][b] = { ...NO_CONFLICT };
    }
  }
  let blocking = false;
  for (const finding of findings) {
    const cell: MatrixCell = {
      case: finding.case,
      dot: finding.dot,
      variant: finding.variant,
      contexts: finding.contexts,
    };
    if (cells[finding.policyA]) cells[finding.policyA][finding.policyB] = cell;
    if (cells[finding.policyB]) cells[finding.policyB][finding.policyA] = cell;
    if (finding.severity === "error") blocking = true;
  }
  return { policies, cells, blocking, scenarios: [] };
}

export class DashboardModel {
  matrix: ConflictMatrix | null = null;
  assistantId: string | null = null;

  constructor(private readonly client: GatewayClient) {}

  async load(assistantId?: string): Promise<ConflictMatrix> {
    const assistants = await this.client.listAssistants();
    if (assistants.length === 0) throw new Error("no assistants configured");
    const chosen = assistantId
      ? assistants.find((a) => a.id === assistantId)
      : assistants[0];
    if (!chosen) throw new Error(`no assistant ${assistantId}`);
    const report = await this.client.analyzeAssistant(chosen.id);
    const policies = [...chosen.inputPolicies, ...chosen.outputPolicies];
    const matrix = buildMatrix(policies, report.findings);
    matrix.blocking = report.blocking;
    matrix.scenarios = report.scenarios;
    this.matrix = matrix;
    this.assistantId = chosen.id;
    return matrix;
  }
}
