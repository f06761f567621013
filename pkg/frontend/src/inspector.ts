/** Read-only knowledge-graph inspector: slides -> main concepts (with
 * weights) -> related concepts and categories. Pure data shaping; rendering
 * lives in ui.ts. */

import { KgRecord } from "./api.js";

/** Concepts at or above this weight render with the "kept" badge color. */
export const WEIGHT_THRESHOLD = 0.192;

export interface ConceptRow {
  id: string;
  title: string;
  weight: number | null;
  kind: string;
}

export interface McView extends ConceptRow {
  related: ConceptRow[];
  categories: ConceptRow[];
}

export interface InspectorView {
  materialId: string;
  slides: { slideNo: number; id: string; concepts: string[] }[];
  mcs: McView[];
  empty: boolean;
}

export function badgeClass(weight: number | null): string {
  if (weight === null) return "badge-none";
  return weight >= WEIGHT_THRESHOLD ? "badge-kept" : "badge-low";
}

export function buildInspectorView(
  materialId: string,
  records: KgRecord[],
): InspectorView {
  const nodes = new Map<string, KgRecord>();
  const edges: KgRecord[] = [];
  for (const rec of records) {
    if (rec.t === "node" && rec.id) nodes.set(rec.id, rec);
    else if (rec.t === "edge") edges.push(rec);
  }

  const label = (id: string): string => {
    const node = nodes.get(id);
    return String(node?.title ?? node?.name ?? id);
  };

  const slides = [...nodes.values()]
    .filter((n) => n.type === "Slide")
    .map((n) => ({
      slideNo: Number(n.slide_no ?? 0),
      id: n.id as string,
      concepts: edges
        .filter((e) => e.type === "CONTAINS" && e.from === n.id)
        .map((e) => label(e.to as string)),
    }))
    .sort((a, b) => a.slideNo - b.slideNo);

  const mcs: McView[] = edges
    .filter((e) => e.type === "HAS_CONCEPT")
    .map((e) => {
      const id = e.to as string;
      const related: ConceptRow[] = edges
        .filter((r) => r.type === "RELATED_TO" && r.from === id)
        .map((r) => ({
          id: r.to as string,
          title: label(r.to as string),
          weight: r.w ?? null,
          kind: "RC",
        }));
      const categories: ConceptRow[] = edges
        .filter((c) => c.type === "BELONGS_TO" && c.from === id)
        .map((c) => ({
          id: c.to as string,
          title: label(c.to as string),
          weight: c.w ?? null,
          kind: "Category",
        }));
      return {
        id,
        title: label(id),
        weight: e.w ?? null,
        kind: String(nodes.get(id)?.kind ?? "MC"),
        related,
        categories,
      };
    })
    .sort((a, b) => (b.weight ?? -2) - (a.weight ?? -2));

  return { materialId, slides, mcs, empty: nodes.size === 0 };
}
