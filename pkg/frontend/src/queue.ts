/** Escalation queue store: polls pending reviews, submits operator decisions.
 *
 * Each decision maps to exactly one gateway call; a stale decision (someone
 * else resolved first, HTTP 409) is surfaced as a notice instead of an
 * error state, and the queue re-syncs on the next poll.
 */

import { ApiError, GatewayClient } from "./api.js";
import { Poller } from "./poller.js";
import type { Decision, ResolveResult, ReviewItem } from "./types.js";

export class QueueStore {
  items: ReviewItem[] = [];
  error: string | null = null;
  notice: string | null = null;
  lastSyncAt: number | null = null;
  readonly poller: Poller;

  constructor(
    private readonly client: GatewayClient,
    private readonly operatorId: string,
    pollIntervalMs: number,
  ) {
    this.poller = new Poller(() => this.refresh(), pollIntervalMs, () => {
      this.error = "gateway unreachable";
    });
  }

  async refresh(): Promise<void> {
    try {
      this.items = await this.client.listReviews("pending");
      this.error = null;
      this.lastSyncAt = Date.now();
    } catch (err) {
      this.error = "gateway unreachable";
      throw err;
    }
  }

  /** Resolve one review. Returns the outcome, or null when the item was
   * already resolved elsewhere (surfaced via `notice`, never destructive). */
  async decide(
    reviewId: string,
    decision: Decision,
    policyId?: string,
  ): Promise<ResolveResult | null> {
    try {
      const result = await this.client.resolveReview(
        reviewId,
        decision,
        this.operatorId,
        policyId,
      );
      this.items = this.items.filter((item) => item.id !== reviewId);
      this.notice = null;
      return result;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.notice = `review ${reviewId} was already resolved`;
        await this.refresh().catch(() => undefined);
        return null;
      }
      throw err;
    }
  }
}
