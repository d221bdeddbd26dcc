import { ReviewApiClient } from "./api.js";
import { ReviewController } from "./controller.js";
import type { Round, Verdict } from "./types.js";

const VERDICT_LABELS: Record<Verdict, string> = {
  keep: "Keep (K)",
  missing_found: "Missing character (M)",
  incorrect: "Incorrect (I)",
  redundant: "Redundant (R)",
};

function element<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export function mount(root: HTMLElement, baseUrl: string, reviewer: string): ReviewController {
  const api = new ReviewApiClient(baseUrl);
  const controller = new ReviewController(api, reviewer);

  function render(): void {
    const view = controller.view();
    root.replaceChildren();

    const header = element("div", "header");
    for (const round of [1, 2] as Round[]) {
      const button = element(
        "button",
        view.round === round ? "round active" : "round",
        `Round ${round}`,
      );
      button.onclick = () => void controller.setRound(round).then(render);
      header.appendChild(button);
    }
    if (view.note) header.appendChild(element("span", "note", view.note));
    if (view.queuedCount > 0)
      header.appendChild(element("span", "queue", `queued: ${view.queuedCount}`));
    if (view.blocked)
      header.appendChild(element("span", "blocked", "offline queue full: blocked"));
    root.appendChild(header);

    if (view.done || view.task === null) {
      root.appendChild(element("p", "done", "No tasks left in this round."));
      return;
    }

    const main = element("div", "panes");
    const referencePane = element("div", "reference");
    referencePane.appendChild(element("h3", undefined, `Reference: ${view.task.video_id}`));
    const referenceImage = element("img");
    referenceImage.src = view.referenceImage ?? "";
    referenceImage.onerror = () => {
      const retry = element("button", "retry", "Image failed, retry");
      retry.onclick = render;
      referencePane.appendChild(retry);
    };
    referencePane.appendChild(referenceImage);
    main.appendChild(referencePane);

    const candidatePane = element("div", "candidates");
    candidatePane.appendChild(
      element("h3", undefined, `Shots (page ${view.page + 1}/${view.pageCount})`),
    );
    for (const candidate of view.visibleCandidates) {
      const cell = element(
        "figure",
        candidate.shot_index === view.selectedShot ? "candidate selected" : "candidate",
      );
      const image = element("img");
      image.src = api.resolve(candidate.image_ref);
      cell.appendChild(image);
      cell.appendChild(element("figcaption", undefined, `shot ${candidate.shot_index}`));
      cell.onclick = () => {
        controller.selectShot(candidate.shot_index);
        render();
      };
      candidatePane.appendChild(cell);
    }
    main.appendChild(candidatePane);
    root.appendChild(main);

    const controls = element("div", "controls");
    for (const verdict of view.legalVerdicts) {
      const button = element("button", `verdict ${verdict}`, VERDICT_LABELS[verdict]);
      button.disabled = !controller.canSubmit(verdict);
      button.onclick = () => void controller.submit(verdict).then(render);
      controls.appendChild(button);
    }
    root.appendChild(controls);
  }

  document.addEventListener("keydown", (event) => {
    if (event.ctrlKey || event.metaKey || event.altKey) return;
    if (event.target instanceof HTMLInputElement) return;
    void controller.handleKey(event.key).then(render);
  });
  window.setInterval(() => {
    void controller.flushQueue().then((n) => {
      if (n > 0) render();
    });
  }, 3000);

  void controller.start(1).then(render);
  return controller;
}

declare global {
  interface Window {
    loomkitReview?: ReviewController;
  }
}

const rootElement = document.getElementById("app");
if (rootElement) {
  const params = new URLSearchParams(window.location.search);
  window.loomkitReview = mount(
    rootElement,
    params.get("service") ?? "http://127.0.0.1:8000",
    params.get("reviewer") ?? "reviewer",
  );
}
