/** App bootstrap: one annotation session per tab, plus the KG inspector.
 * All data comes from the backing HTTP API; nothing is computed locally. */

import { ApiClient } from "./api.js";
import { buildInspectorView } from "./inspector.js";
import { installShortcuts } from "./keyboard.js";
import { SessionController } from "./session.js";
import { renderInspector, renderSession } from "./ui.js";

export async function startApp(root: HTMLElement, api: ApiClient): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const materialId = params.get("material") ?? "";

  if (!materialId) {
    root.textContent = "Add ?material=<id> to the URL to start.";
    return;
  }

  if (params.get("view") === "kg") {
    try {
      const { records } = await api.materialKg(materialId);
      root.replaceChildren(renderInspector(buildInspectorView(materialId, records)));
    } catch {
      const info = await api.slides(materialId).catch(() => null);
      root.textContent = info
        ? `Build in progress: slides ${info.slides.join(", ")} done, merge pending.`
        : `Material ${materialId} not found.`;
    }
    return;
  }

  const { session_id } = await api.createSession(materialId);
  const controller = new SessionController(api, session_id);

  controller.subscribe((state) => {
    root.replaceChildren(renderSession(state));
    root.querySelector<HTMLButtonElement>("#judge-correct")
      ?.addEventListener("click", () => void controller.judge("correct"));
    root.querySelector<HTMLButtonElement>("#judge-incorrect")
      ?.addEventListener("click", () => void controller.judge("incorrect"));
    root.querySelector<HTMLButtonElement>("#retry")
      ?.addEventListener("click", () => void controller.retry());
  });

  installShortcuts({
    judge: (verdict) => void controller.judge(verdict),
    enabled: () => controller.getState().phase === "judging",
  });

  await controller.advance();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void startApp(document.getElementById("app") as HTMLElement, new ApiClient(""));
}
