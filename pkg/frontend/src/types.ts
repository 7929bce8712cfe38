/** Wire types mirroring the consultation service's published JSON API. */

export type SessionState = "ready_to_ask" | "awaiting_answers" | "finalized";

export type AnswerValue = "present" | "absent" | "unsure";

export interface RankingEntry {
  disease: string;
  similarity: number;
}

export interface QuestionPayload {
  round: number;
  symptoms: string[];
  text: string;
}

export interface DiagnosisPayload {
  disease: string;
  confidence: number;
  advice_text: string;
  provenance: string;
  update_proposal: unknown;
}

export interface SessionPayload {
  session_id: string;
  state: SessionState;
  round: number;
  ranking: RankingEntry[];
  question: QuestionPayload | null;
  diagnosis: DiagnosisPayload | null;
}

export interface RecorderPayload {
  present: string[];
  absent: string[];
  asked: string[];
}

export interface HistoryEntry {
  round: number;
  symptoms: string[];
  answers: Record<string, AnswerValue>;
}

export interface SessionViewPayload {
  session_id: string;
  state: SessionState;
  round: number;
  recorder: RecorderPayload;
  ranking: RankingEntry[];
  outstanding: string[] | null;
  history: HistoryEntry[];
  diagnosis: DiagnosisPayload | null;
}

export interface ErrorEnvelope {
  error: { code: string; message: string };
}

export interface CreateSessionBody {
  initial_text?: string;
  symptom_ids?: string[];
  config?: Record<string, unknown>;
}

export type AnswersBody =
  | { answers: Record<string, AnswerValue> }
  | { text: string };
