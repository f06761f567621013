/** Scripted in-memory backend for tests: answers the same routes the real
 * service exposes, driven entirely by canned data. */

import { vi } from "vitest";

export interface BackendOptions {
  /** The session stops once this many judgments have been recorded. */
  stopAt?: number;
  /** Readout string the backend reports once stopped. */
  readout?: string;
  /** Triples available before the pool is exhausted. */
  poolSize?: number;
}

export interface ScriptedBackend {
  fetchMock: ReturnType<typeof vi.fn>;
  judgments: { triple_id: string; verdict: string }[];
  /** Counts of requests per "METHOD path" key. */
  calls: Map<string, number>;
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function makeBackend(opts: BackendOptions = {}): ScriptedBackend {
  const stopAt = opts.stopAt ?? 40;
  const readout = opts.readout ?? "0.47 ± 0.049";
  const poolSize = opts.poolSize ?? stopAt + 10;

  const judgments: { triple_id: string; verdict: string }[] = [];
  const calls = new Map<string, number>();
  let served = 0;

  const stats = () => {
    const n = judgments.length;
    const correct = judgments.filter((j) => j.verdict === "correct").length;
    const mu = n ? correct / n : 0;
    return {
      n,
      mu,
      sigma: 0.025,
      moe: n >= stopAt ? 0.049 : 0.2,
      stopped: n >= stopAt,
      readout,
    };
  };

  const fetchMock = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const key = `${method} ${path}`;
    calls.set(key, (calls.get(key) ?? 0) + 1);

    if (method === "POST" && path === "/eval/sessions") {
      const body = JSON.parse(String(init?.body ?? "{}"));
      return json({ session_id: "s1", material_id: body.material_id });
    }
    if (method === "GET" && path === "/eval/sessions/s1/next") {
      if (stats().stopped) return json({ detail: "session stopped" }, 409);
      if (served >= poolSize) return json({ detail: "pool exhausted" }, 409);
      served += 1;
      return json({
        triple_id: `t${served}`,
        subject: `m:s${served}`,
        predicate: "CONTAINS",
        object: `kb:${served}`,
        subject_label: `Slide ${served}`,
        object_label: `Concept ${served}`,
        provenance: "slide",
        context: { slide_snippet: `snippet ${served}` },
      });
    }
    if (method === "POST" && path === "/eval/sessions/s1/judgments") {
      const body = JSON.parse(String(init?.body ?? "{}"));
      if (stats().stopped) return json({ detail: "session already stopped" }, 409);
      if (judgments.some((j) => j.triple_id === body.triple_id)) {
        return json({ detail: "triple already judged" }, 409);
      }
      judgments.push({ triple_id: body.triple_id, verdict: body.verdict });
      return json(stats());
    }
    if (method === "GET" && path === "/eval/sessions/s1/stats") {
      return json(stats());
    }
    return json({ detail: `no route for ${key}` }, 404);
  });

  return { fetchMock, judgments, calls };
}

/** Let queued promise callbacks (fetch chains, state updates) settle. */
export async function flush(): Promise<void> {
  for (let i = 0; i < 10; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}
