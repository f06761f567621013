/** Keyboard shortcuts for annotation throughput:
 *   C = judge correct, I = judge incorrect.
 * Ignored while typing in form fields or when judging is unavailable. */

export interface ShortcutTarget {
  judge(verdict: "correct" | "incorrect"): void;
  /** Shortcuts fire only when this returns true (session is judging). */
  enabled(): boolean;
}

export function handleShortcut(event: KeyboardEvent, target: ShortcutTarget): boolean {
  if (event.ctrlKey || event.metaKey || event.altKey) return false;
  const el = event.target as HTMLElement | null;
  const tag = el?.tagName?.toUpperCase() ?? "";
  if (tag === "INPUT" || tag === "TEXTAREA" || tag === "SELECT") return false;
  if (!target.enabled()) return false;
  switch (event.key.toLowerCase()) {
    case "c":
      target.judge("correct");
      return true;
    case "i":
      target.judge("incorrect");
      return true;
    default:
      return false;
  }
}

export function installShortcuts(target: ShortcutTarget, doc: Document = document): () => void {
  const listener = (event: KeyboardEvent) => {
    if (handleShortcut(event, target)) event.preventDefault();
  };
  doc.addEventListener("keydown", listener);
  return () => doc.removeEventListener("keydown", listener);
}
