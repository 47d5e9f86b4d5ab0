// Wire types mirroring the scriptchat HTTP API (see docs/formats.md).

export type SegmentKind = "text" | "code";

export interface MessageSegment {
  kind: SegmentKind;
  body: string;
  language?: string | null;
  raw_open?: string | null;
  closed?: boolean;
}

export type Speaker = "user" | "assistant";

export interface TranscriptEntry {
  kind: "greeting" | "user_turn" | "assistant_turn" | "retry_marker" | "reset_marker";
  speaker: Speaker | null;
  segments: MessageSegment[];
  seq: number | null;
  superseded: boolean;
  timestamp: number | null;
}

export interface TranscriptResponse {
  session_id: string;
  persona: string | null;
  entries: TranscriptEntry[];
}

export interface Usage {
  prompt_tokens: number;
  completion_tokens: number;
  total_tokens: number;
  latency: number;
}

export interface TurnOutcome {
  assistant_segments: MessageSegment[];
  truncated: boolean;
  oversized: boolean;
  usage: Usage;
}

export interface CreateSessionResponse {
  session_id: string;
  persona: string;
  greeting: string;
  created_at: number;
  budget: { context_limit: number; generation_reserve: number; safety_margin: number };
}

export interface PromptDebugResponse {
  text: string;
  included_seqs: number[];
  estimated_tokens: number;
  truncated: boolean;
  oversized: boolean;
}

export interface CodeSelectionBody {
  body: string;
  language?: string | null;
}

export interface TurnBody {
  text?: string | null;
  code_selection?: CodeSelectionBody | null;
}
