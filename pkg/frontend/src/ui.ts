/** DOM rendering for the annotation view and the KG inspector. */

import { SessionStats } from "./api.js";
import { badgeClass, ConceptRow, InspectorView } from "./inspector.js";
import { SessionState } from "./session.js";

function h(tag: string, className: string, text?: string): HTMLElement {
  const el = document.createElement(tag);
  el.className = className;
  if (text !== undefined) el.textContent = text;
  return el;
}

export function renderStats(stats: SessionStats | null): HTMLElement {
  const box = h("div", "stats");
  if (!stats) {
    box.append(h("span", "stats-empty", "no judgments yet"));
    return box;
  }
  box.append(
    h("span", "stat", `n = ${stats.n}`),
    h("span", "stat", `accuracy ${stats.readout}`),
    h("span", "stat", `moe = ${stats.moe.toFixed(3)}`),
  );
  return box;
}

export function renderSession(state: SessionState): HTMLElement {
  const root = h("section", "session");
  root.append(renderStats(state.stats));

  if (state.phase === "stopped") {
    const banner = h("div", "banner banner-stopped");
    banner.setAttribute("role", "status");
    banner.append(
      h("strong", "", "Session stopped"),
      h("span", "readout", ` final accuracy ${state.stats?.readout ?? ""}`),
    );
    root.append(banner);
  } else if (state.phase === "exhausted") {
    root.append(h("div", "banner", "Sample pool exhausted before stabilizing."));
  } else if (state.phase === "error") {
    const banner = h("div", "banner banner-error", state.error ?? "error");
    const retry = h("button", "retry", "Retry") as HTMLButtonElement;
    retry.id = "retry";
    banner.append(retry);
    root.append(banner);
  } else if (state.triple) {
    const card = h("div", "triple-card");
    card.append(
      h("div", "triple-subject", state.triple.subject_label),
      h("div", "triple-predicate", state.triple.predicate),
      h("div", "triple-object", state.triple.object_label),
    );
    if (state.triple.context.slide_snippet) {
      card.append(h("blockquote", "context-slide", state.triple.context.slide_snippet));
    }
    if (state.triple.context.object_abstract) {
      card.append(h("blockquote", "context-abstract", state.triple.context.object_abstract));
    }
    root.append(card);
  } else {
    root.append(h("div", "loading", "loading…"));
  }

  const controls = h("div", "controls");
  const correct = h("button", "judge judge-correct", "Correct (C)") as HTMLButtonElement;
  correct.id = "judge-correct";
  const incorrect = h("button", "judge judge-incorrect", "Incorrect (I)") as HTMLButtonElement;
  incorrect.id = "judge-incorrect";
  const disabled = state.phase !== "judging";
  correct.disabled = disabled;
  incorrect.disabled = disabled;
  controls.append(correct, incorrect);
  root.append(controls);
  return root;
}

function conceptBadge(row: ConceptRow): HTMLElement {
  const badge = h("span", `badge ${badgeClass(row.weight)}`);
  badge.append(h("span", "badge-title", row.title));
  if (row.weight !== null) {
    badge.append(h("span", "badge-weight", row.weight.toFixed(3)));
  }
  return badge;
}

export function renderInspector(view: InspectorView): HTMLElement {
  const root = h("section", "inspector");
  if (view.empty) {
    root.append(h("div", "empty-state", "This material has no graph yet."));
    return root;
  }
  const slideList = h("ul", "slides");
  for (const slide of view.slides) {
    const item = h("li", "slide", `Slide ${slide.slideNo}`);
    item.append(h("span", "slide-concepts", slide.concepts.join(", ")));
    slideList.append(item);
  }
  root.append(h("h2", "", `Material ${view.materialId}`), slideList);

  const mcList = h("ul", "concepts");
  for (const mc of view.mcs) {
    const item = h("li", "concept");
    item.append(conceptBadge(mc));
    if (mc.related.length) {
      const rel = h("div", "related");
      rel.append(h("span", "related-label", "related: "));
      for (const r of mc.related) rel.append(conceptBadge(r));
      item.append(rel);
    }
    if (mc.categories.length) {
      const cats = h("div", "categories");
      cats.append(h("span", "categories-label", "categories: "));
      for (const c of mc.categories) cats.append(conceptBadge(c));
      item.append(cats);
    }
    mcList.append(item);
  }
  root.append(mcList);
  return root;
}
