/** DOM rendering for the chat view. Passive: reads UiSessionView, wires
 * events back into the controller, and never holds state of its own. */

import type { ConsultationController, UiSessionView } from "./controller.js";
import type { AnswerValue } from "./types.js";

const ANSWER_LABELS: Array<[AnswerValue, string]> = [
  ["present", "Yes"],
  ["absent", "No"],
  ["unsure", "Not sure"],
];

export class ChatView {
  private root: HTMLElement;

  constructor(
    root: HTMLElement,
    private readonly controller: ConsultationController,
  ) {
    this.root = root;
    controller.subscribe((view) => this.render(view));
    this.render(controller.getView());
  }

  private render(view: UiSessionView): void {
    this.root.replaceChildren(
      this.renderBadge(view),
      this.renderTurns(view),
      this.renderBanner(view),
      this.renderControls(view),
      this.renderRanking(view),
    );
  }

  private renderBadge(view: UiSessionView): HTMLElement {
    const badge = el("div", "state-badge");
    badge.dataset.state = view.status;
    badge.textContent = view.inFlight ? "thinking..." : view.status.replace("_", " ");
    return badge;
  }

  private renderTurns(view: UiSessionView): HTMLElement {
    const log = el("div", "chat-log");
    for (const turn of view.turns) {
      const bubble = el("div", `turn turn-${turn.role} turn-${turn.kind}`);
      if (turn.kind === "diagnosis" && turn.diagnosis) {
        bubble.classList.add("diagnosis-card");
        const title = el("h3");
        title.textContent = `Diagnosis: ${turn.diagnosis.disease}`;
        const confidence = el("p", "confidence");
        confidence.textContent = `Confidence ${(turn.diagnosis.confidence * 100).toFixed(0)}%`;
        const advice = el("p");
        advice.textContent = turn.diagnosis.advice_text;
        bubble.append(title, confidence, advice);
      } else {
        bubble.textContent = turn.text;
      }
      log.append(bubble);
    }
    return log;
  }

  private renderBanner(view: UiSessionView): HTMLElement {
    const host = el("div", "banner-host");
    if (!view.banner) {
      return host;
    }
    const banner = el("div", `banner banner-${view.banner.kind}`);
    const message = el("span");
    message.textContent = view.banner.message;
    banner.append(message);
    if (view.banner.kind === "retry") {
      const button = el("button", "retry-button") as HTMLButtonElement;
      button.textContent = "Retry";
      button.addEventListener("click", () => void this.controller.retry());
      banner.append(button);
    }
    host.append(banner);
    return host;
  }

  private renderControls(view: UiSessionView): HTMLElement {
    const host = el("div", "controls");
    if (view.status === "idle") {
      host.append(this.textEntry("Describe your symptoms...", (text) =>
        void this.controller.startConsultation(text),
      ));
      return host;
    }
    if (view.status !== "awaiting_answers" || !view.outstanding) {
      return host; // finalized: the card is the last word
    }
    for (const symptom of view.outstanding.symptoms) {
      const row = el("div", "answer-row");
      const label = el("span", "symptom-label");
      label.textContent = symptom;
      row.append(label);
      for (const [value, caption] of ANSWER_LABELS) {
        const button = el("button", "answer-button") as HTMLButtonElement;
        button.textContent = caption;
        button.disabled = view.inFlight;
        if (view.selections[symptom] === value) {
          button.classList.add("selected");
        }
        button.addEventListener("click", () => this.controller.setAnswer(symptom, value));
        row.append(button);
      }
      host.append(row);
    }
    const submit = el("button", "submit-button") as HTMLButtonElement;
    submit.textContent = "Send answers";
    submit.disabled = view.inFlight;
    submit.addEventListener("click", () => void this.controller.submitSelections());
    host.append(submit);
    host.append(
      this.textEntry(
        "...or reply in your own words",
        (text) => void this.controller.submitText(text),
        view.inFlight,
      ),
    );
    return host;
  }

  private textEntry(
    placeholder: string,
    onSubmit: (text: string) => void,
    disabled = false,
  ): HTMLElement {
    const form = el("form", "text-entry") as HTMLFormElement;
    const input = el("input") as HTMLInputElement;
    input.type = "text";
    input.placeholder = placeholder;
    input.disabled = disabled;
    const send = el("button") as HTMLButtonElement;
    send.type = "submit";
    send.textContent = "Send";
    send.disabled = disabled;
    form.append(input, send);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      if (input.value.trim()) {
        onSubmit(input.value);
        input.value = "";
      }
    });
    return form;
  }

  private renderRanking(view: UiSessionView): HTMLElement {
    const details = el("details", "ranking-panel") as HTMLDetailsElement;
    const summary = el("summary");
    summary.textContent = "Candidate ranking (clinician view)";
    details.append(summary);
    for (const entry of view.ranking) {
      const row = el("div", "ranking-row");
      const name = el("span", "ranking-name");
      name.textContent = entry.disease;
      const bar = el("div", "ranking-bar");
      const fill = el("div", "ranking-fill");
      fill.style.width = `${Math.round(entry.similarity * 100)}%`;
      bar.append(fill);
      const value = el("span", "ranking-value");
      value.textContent = entry.similarity.toFixed(3);
      row.append(name, bar, value);
      details.append(row);
    }
    return details;
  }
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  return node;
}
