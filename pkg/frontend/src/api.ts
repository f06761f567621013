/** Typed client for the knowledge-graph service HTTP API.
 *
 * The UI never computes statistics locally; every number shown comes from
 * these responses.
 */

export interface SessionStats {
  n: number;
  mu: number;
  sigma: number;
  moe: number;
  stopped: boolean;
  /** Server-formatted accuracy readout, e.g. "0.47 ± 0.049". */
  readout: string;
}

export interface TripleView {
  triple_id: string;
  subject: string;
  predicate: string;
  object: string;
  subject_label: string;
  object_label: string;
  provenance: string;
  context: { slide_snippet?: string; object_abstract?: string };
}

export type Verdict = "correct" | "incorrect";

export interface KgRecord {
  t: "header" | "node" | "edge";
  type?: string;
  id?: string;
  from?: string;
  to?: string;
  w?: number;
  title?: string;
  name?: string;
  kind?: string;
  slide_no?: number;
  [key: string]: unknown;
}

export interface SlidesInfo {
  material_id: string;
  slides: number[];
  material_ready: boolean;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function request<T>(input: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(input, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  createSession(materialId: string, seed = 0): Promise<{ session_id: string }> {
    return request(`${this.base}/eval/sessions`, {
      method: "POST",
      body: JSON.stringify({ material_id: materialId, seed }),
    });
  }

  nextTriple(sessionId: string): Promise<TripleView> {
    return request(`${this.base}/eval/sessions/${sessionId}/next`);
  }

  submitJudgment(
    sessionId: string,
    tripleId: string,
    verdict: Verdict,
  ): Promise<SessionStats> {
    return request(`${this.base}/eval/sessions/${sessionId}/judgments`, {
      method: "POST",
      body: JSON.stringify({ triple_id: tripleId, verdict }),
    });
  }

  sessionStats(sessionId: string): Promise<SessionStats> {
    return request(`${this.base}/eval/sessions/${sessionId}/stats`);
  }

  materialKg(materialId: string): Promise<{ records: KgRecord[] }> {
    return request(`${this.base}/materials/${materialId}/kg`);
  }

  slides(materialId: string): Promise<SlidesInfo> {
    return request(`${this.base}/materials/${materialId}/slides`);
  }

  jobStatus(jobId: string): Promise<{ status: string }> {
    return request(`${this.base}/jobs/${jobId}`);
  }
}
