// Pure projection from the service transcript to what the chat pane shows.
// No reordering, no filtering: every entry maps to exactly one item, so a
// refresh reproduces the identical view from GET /transcript alone.

import type { MessageSegment, TranscriptEntry, TranscriptResponse } from "./types.js";

/** Code segments longer than this many lines render as an expandable chip. */
export const DEFAULT_ICONIFY_THRESHOLD = 4;

export interface CodeBlockView {
  body: string;
  language: string | null;
  lineCount: number;
  iconified: boolean;
}

export type MessagePart =
  | { kind: "text"; text: string }
  | { kind: "code"; block: CodeBlockView };

export interface DisplayMessage {
  role: "user" | "assistant";
  parts: MessagePart[];
  superseded: boolean;
  greeting: boolean;
  seq: number | null;
}

export type TranscriptItem =
  | { kind: "message"; message: DisplayMessage }
  | { kind: "retry-note"; seq: number | null }
  | { kind: "reset-divider"; seq: number | null };

/** Lines in a code body; the conventional trailing newline adds none. */
export function countLines(body: string): number {
  if (body.length === 0) return 0;
  const trimmed = body.endsWith("\n") ? body.slice(0, -1) : body;
  if (trimmed.length === 0) return 1;
  return trimmed.split("\n").length;
}

function toPart(segment: MessageSegment, threshold: number): MessagePart {
  if (segment.kind === "code") {
    const lineCount = countLines(segment.body);
    return {
      kind: "code",
      block: {
        body: segment.body,
        language: segment.language ?? null,
        lineCount,
        iconified: lineCount > threshold,
      },
    };
  }
  return { kind: "text", text: segment.body };
}

function toMessage(entry: TranscriptEntry, threshold: number): DisplayMessage {
  return {
    role: entry.speaker === "user" ? "user" : "assistant",
    parts: entry.segments.map((s) => toPart(s, threshold)),
    superseded: entry.superseded,
    greeting: entry.kind === "greeting",
    seq: entry.seq,
  };
}

export function projectTranscript(
  transcript: TranscriptResponse,
  threshold: number = DEFAULT_ICONIFY_THRESHOLD,
): TranscriptItem[] {
  return transcript.entries.map((entry): TranscriptItem => {
    switch (entry.kind) {
      case "retry_marker":
        return { kind: "retry-note", seq: entry.seq };
      case "reset_marker":
        return { kind: "reset-divider", seq: entry.seq };
      default:
        return { kind: "message", message: toMessage(entry, threshold) };
    }
  });
}
