import { ApiClient } from "./api.js";
import { renderBatch, renderCurves, renderStatus } from "./render.js";
import { AnnotatorSession, KEYMAP } from "./session.js";

/** Browser entry point: wire the session to a root element. */
export function mount(root: HTMLElement, baseUrl = ""): AnnotatorSession {
  const session = new AnnotatorSession(new ApiClient(baseUrl));
  let focusedTask: string | null = null;

  const draw = () => {
    const { run, batch, curve, error } = session.state;
    root.innerHTML = [
      error ? `<div class="banner error">${error} <button data-action="retry">retry</button></div>` : "",
      run ? renderStatus(run) : "",
      batch ? renderBatch(batch) : "",
      curve ? renderCurves(curve) : "",
    ].join("");
  };

  const act = async (taskId: string | null, action: string) => {
    if (action === "submit" || action === "retry") {
      await session.submit();
    } else if (taskId && action === "match") {
      session.decide(taskId, 1);
    } else if (taskId && action === "non-match") {
      session.decide(taskId, 0);
    } else if (taskId && action === "undo") {
      session.undo(taskId);
    } // skip: leave the card pending
    draw();
  };

  root.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest("[data-action]");
    if (!button) return;
    const card = button.closest("[data-task]");
    void act(card?.getAttribute("data-task") ?? null, button.getAttribute("data-action")!);
  });
  root.addEventListener("mouseover", (event) => {
    const card = (event.target as HTMLElement).closest("[data-task]");
    if (card) focusedTask = card.getAttribute("data-task");
  });
  document.addEventListener("keydown", (event) => {
    const action = KEYMAP[event.key];
    if (action) void act(focusedTask, action);
  });

  void session.refresh().then(draw);
  return session;
}
