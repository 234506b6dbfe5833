/** Shapes of the service's JSON resources, mirrored verbatim. */

export interface DocEntry {
  id: string;
  score: number;
}

export interface DocumentsPayload {
  type: "documents";
  docs: DocEntry[];
}

export interface KeytermPayload {
  type: "keyterm";
  term: string | null;
  noop?: boolean;
}

export interface RequestPayload {
  type: "request";
  query_terms: string[];
}

export interface TopicCard {
  topic: number;
  terms: string[];
}

export interface TopicsPayload {
  type: "topics";
  topics: TopicCard[];
}

export interface FinalPayload {
  type: "final";
  docs: DocEntry[];
}

export type PendingPayload =
  | DocumentsPayload
  | KeytermPayload
  | RequestPayload
  | TopicsPayload;

/** User inputs, one shape per payload type. */
export type UserInput =
  | { doc: string | null }
  | { answer: "yes" | "no" }
  | { term: string | null }
  | { topic: number | null };

export interface StepResponse {
  action: string;
  payload: PendingPayload | FinalPayload;
  terminal: boolean;
}

export interface CreateResponse extends StepResponse {
  session_id: string;
}

export interface TranscriptEntry {
  action: string;
  payload: unknown;
  response: unknown;
  reward: number | null;
}

export interface SessionResource {
  session_id: string;
  qid: string;
  policy: string;
  terminal: boolean;
  transcript: TranscriptEntry[];
  total_reward: number;
  final?: FinalPayload;
  q_values?: number[];
}
