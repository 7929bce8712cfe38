/** Headless session controller.
 *
 * Owns the chat state machine and talks to the service through ApiClient.
 * Rendering is a separate, passive layer: every turn appended here
 * corresponds 1:1 to a server event (session created, question batch,
 * answers received, diagnosis issued) and nothing is fabricated client-side.
 * At most one request is in flight per session; failed requests are kept so
 * a retry banner can re-send them without losing state.
 */

import { ApiClient, ApiError, NetworkError } from "./api.js";
import type {
  AnswersBody,
  AnswerValue,
  CreateSessionBody,
  DiagnosisPayload,
  QuestionPayload,
  RankingEntry,
  SessionPayload,
} from "./types.js";

export interface ChatTurn {
  role: "patient" | "doctor";
  kind: "complaint" | "question" | "answer" | "diagnosis";
  text: string;
  symptoms?: string[];
  answers?: Record<string, AnswerValue>;
  diagnosis?: DiagnosisPayload;
}

export type Banner =
  | { kind: "retry"; message: string }
  | { kind: "rephrase"; message: string }
  | null;

export type UiStatus = "idle" | "awaiting_answers" | "finalized";

export interface UiSessionView {
  sessionId: string | null;
  status: UiStatus;
  inFlight: boolean;
  turns: ChatTurn[];
  outstanding: QuestionPayload | null;
  selections: Record<string, AnswerValue>;
  ranking: RankingEntry[];
  banner: Banner;
  /** Client-side faults; a healthy consultation keeps this empty. */
  errors: string[];
}

type PendingAction =
  | { type: "create"; text: string; body: CreateSessionBody }
  | { type: "answers"; body: AnswersBody; echoText: string };

export class ConsultationController {
  private view: UiSessionView = emptyView();
  private pending: PendingAction | null = null;
  private listeners: Array<(view: UiSessionView) => void> = [];

  constructor(private readonly api: ApiClient) {}

  /** Immutable snapshot for rendering. */
  getView(): UiSessionView {
    return {
      ...this.view,
      turns: [...this.view.turns],
      selections: { ...this.view.selections },
      ranking: [...this.view.ranking],
      errors: [...this.view.errors],
    };
  }

  subscribe(listener: (view: UiSessionView) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    const snapshot = this.getView();
    for (const listener of this.listeners) {
      listener(snapshot);
    }
  }

  async startConsultation(text: string): Promise<void> {
    if (this.view.inFlight || this.view.sessionId !== null) {
      return;
    }
    const trimmed = text.trim();
    if (!trimmed) {
      this.view.banner = { kind: "rephrase", message: "Please describe your symptoms first." };
      this.notify();
      return;
    }
    await this.dispatch({
      type: "create",
      text: trimmed,
      body: { initial_text: trimmed },
    });
  }

  setAnswer(symptom: string, value: AnswerValue): void {
    if (this.view.status !== "awaiting_answers" || this.view.inFlight) {
      return;
    }
    if (!this.view.outstanding?.symptoms.includes(symptom)) {
      return;
    }
    this.view.selections[symptom] = value;
    this.notify();
  }

  /** Submit the per-symptom button selections. */
  async submitSelections(): Promise<void> {
    if (this.view.status !== "awaiting_answers" || this.view.inFlight) {
      return;
    }
    const answers = { ...this.view.selections };
    const echo = this.view.outstanding!.symptoms
      .map((s) => `${s}: ${answers[s] ?? "unsure"}`)
      .join(", ");
    await this.dispatch({ type: "answers", body: { answers }, echoText: echo });
  }

  /** Submit a free-text reply; the server parses it against the batch. */
  async submitText(text: string): Promise<void> {
    if (this.view.status !== "awaiting_answers" || this.view.inFlight) {
      return;
    }
    const trimmed = text.trim();
    if (!trimmed) {
      return;
    }
    await this.dispatch({ type: "answers", body: { text: trimmed }, echoText: trimmed });
  }

  /** Re-send the request a retry banner is holding. */
  async retry(): Promise<void> {
    if (!this.pending || this.view.inFlight) {
      return;
    }
    const action = this.pending;
    this.view.banner = null;
    await this.dispatch(action);
  }

  private async dispatch(action: PendingAction): Promise<void> {
    this.view.inFlight = true;
    this.notify();
    try {
      let payload: SessionPayload;
      if (action.type === "create") {
        payload = await this.api.createSession(action.body);
        this.view.turns.push({ role: "patient", kind: "complaint", text: action.text });
      } else {
        payload = await this.api.postAnswers(this.view.sessionId!, action.body);
        this.view.turns.push({
          role: "patient",
          kind: "answer",
          text: action.echoText,
          answers: "answers" in action.body ? action.body.answers : undefined,
        });
      }
      this.pending = null;
      this.view.banner = null;
      this.applySession(payload);
    } catch (err) {
      this.handleFailure(action, err);
    } finally {
      this.view.inFlight = false;
      this.notify();
    }
  }

  private applySession(payload: SessionPayload): void {
    this.view.sessionId = payload.session_id;
    this.view.ranking = payload.ranking;
    if (payload.question) {
      this.view.turns.push({
        role: "doctor",
        kind: "question",
        text: payload.question.text,
        symptoms: [...payload.question.symptoms],
      });
      this.view.outstanding = payload.question;
      this.view.selections = Object.fromEntries(
        payload.question.symptoms.map((s) => [s, "unsure" as AnswerValue]),
      );
      this.view.status = "awaiting_answers";
      return;
    }
    if (payload.diagnosis) {
      this.appendDiagnosis(payload.diagnosis);
      return;
    }
    this.view.errors.push(`server returned state ${payload.state} with neither question nor diagnosis`);
  }

  private appendDiagnosis(diagnosis: DiagnosisPayload): void {
    this.view.outstanding = null;
    this.view.selections = {};
    this.view.status = "finalized";
    if (this.view.turns.some((t) => t.kind === "diagnosis")) {
      return; // the card renders exactly once
    }
    this.view.turns.push({
      role: "doctor",
      kind: "diagnosis",
      text: diagnosis.advice_text,
      diagnosis,
    });
  }

  private handleFailure(action: PendingAction, err: unknown): void {
    if (err instanceof NetworkError) {
      this.pending = action;
      this.view.banner = {
        kind: "retry",
        message: "Could not reach the consultation service. Retry?",
      };
      return;
    }
    if (err instanceof ApiError) {
      if (err.code === "NO_SYMPTOMS") {
        this.pending = null;
        this.view.banner = {
          kind: "rephrase",
          message: "No symptoms were recognized. Try describing them differently.",
        };
        return;
      }
      if (err.status === 409) {
        // the view drifted from the server; resynchronize instead of guessing
        this.pending = null;
        void this.resync();
        return;
      }
      this.pending = null;
      this.view.errors.push(`${err.code}: ${err.message}`);
      return;
    }
    this.pending = null;
    this.view.errors.push(String(err));
  }

  private async resync(): Promise<void> {
    if (!this.view.sessionId) {
      return;
    }
    try {
      const view = await this.api.getSession(this.view.sessionId);
      this.view.ranking = view.ranking;
      if (view.state === "finalized" && view.diagnosis) {
        this.appendDiagnosis(view.diagnosis);
      } else if (view.state === "awaiting_answers" && view.outstanding) {
        const last = this.view.outstanding;
        if (!last || last.symptoms.join(",") !== view.outstanding.join(",")) {
          this.view.turns.push({
            role: "doctor",
            kind: "question",
            text: `Please answer for: ${view.outstanding.join(", ")}`,
            symptoms: [...view.outstanding],
          });
        }
        this.view.outstanding = {
          round: view.round + 1,
          symptoms: view.outstanding,
          text: "",
        };
        this.view.selections = Object.fromEntries(
          view.outstanding.map((s) => [s, "unsure" as AnswerValue]),
        );
        this.view.status = "awaiting_answers";
      }
      this.notify();
    } catch (err) {
      this.view.errors.push(`resync failed: ${String(err)}`);
      this.notify();
    }
  }
}

function emptyView(): UiSessionView {
  return {
    sessionId: null,
    status: "idle",
    inFlight: false,
    turns: [],
    outstanding: null,
    selections: {},
    ranking: [],
    banner: null,
    errors: [],
  };
}
