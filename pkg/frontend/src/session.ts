/** Annotation session loop: fetch next triple, submit verdict, refresh stats,
 * repeat until the backend reports the session stopped.
 *
 * Invariants enforced here:
 *  - every verdict is submitted exactly once (per-triple dedup token);
 *  - no statistics are computed client-side;
 *  - a failed submission keeps the pending verdict for retry.
 */

import { ApiClient, ApiError, SessionStats, TripleView, Verdict } from "./api.js";

export type SessionPhase = "loading" | "judging" | "submitting" | "stopped" | "exhausted" | "error";

export interface SessionState {
  phase: SessionPhase;
  triple: TripleView | null;
  stats: SessionStats | null;
  /** Verdict kept locally when a submission fails, so a retry can re-send it. */
  pendingVerdict: Verdict | null;
  error: string | null;
}

export type Listener = (state: SessionState) => void;

export class SessionController {
  private state: SessionState = {
    phase: "loading",
    triple: null,
    stats: null,
    pendingVerdict: null,
    error: null,
  };
  /** Dedup tokens: triple ids whose verdict has been handed to the server. */
  private submitted = new Set<string>();
  private listeners: Listener[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
  ) {}

  getState(): SessionState {
    return { ...this.state };
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private update(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.getState());
  }

  /** Load the first (or next) triple; 409 means the session is over. */
  async advance(): Promise<void> {
    this.update({ phase: "loading", error: null });
    try {
      const triple = await this.api.nextTriple(this.sessionId);
      this.update({ phase: "judging", triple, pendingVerdict: null });
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        const stats = await this.api.sessionStats(this.sessionId);
        this.update({
          phase: stats.stopped ? "stopped" : "exhausted",
          triple: null,
          stats,
        });
        return;
      }
      this.update({ phase: "error", error: describe(err) });
    }
  }

  /** Submit a verdict for the current triple. Returns false when the submit
   * was rejected client-side (no current triple, duplicate, or stopped). */
  async judge(verdict: Verdict): Promise<boolean> {
    const triple = this.state.triple;
    if (!triple || this.state.phase !== "judging") return false;
    if (this.submitted.has(triple.triple_id)) return false; // dedup token
    this.submitted.add(triple.triple_id);
    this.update({ phase: "submitting", pendingVerdict: verdict });
    try {
      const stats = await this.api.submitJudgment(
        this.sessionId,
        triple.triple_id,
        verdict,
      );
      this.update({ stats, pendingVerdict: null });
      if (stats.stopped) {
        this.update({ phase: "stopped", triple: null });
      } else {
        await this.advance();
      }
      return true;
    } catch (err) {
      // keep the verdict so a retry can re-send it; release the dedup token
      // only for transport-level failures where the server never saw it
      if (!(err instanceof ApiError)) this.submitted.delete(triple.triple_id);
      this.update({ phase: "error", error: describe(err) });
      return false;
    }
  }

  /** Re-send a verdict kept after a network failure. */
  async retry(): Promise<void> {
    const verdict = this.state.pendingVerdict;
    if (this.state.phase !== "error") return;
    if (verdict && this.state.triple) {
      this.update({ phase: "judging" });
      await this.judge(verdict);
    } else {
      await this.advance();
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `server error ${err.status}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}
