// Editor-side logic, kept pure so it is testable without a DOM: selection
// capture and cursor-point insertion over (content, selectionStart,
// selectionEnd) triples that mirror a textarea's state.

export interface EditorState {
  content: string;
  selectionStart: number;
  selectionEnd: number;
}

export function selectedText(state: EditorState): string {
  const start = Math.min(state.selectionStart, state.selectionEnd);
  const end = Math.max(state.selectionStart, state.selectionEnd);
  return state.content.slice(start, end);
}

/** Insert a snippet at the cursor, replacing any active selection; the
 * cursor lands right after the inserted text. The snippet is inserted
 * byte-for-byte: no reformatting, no added newlines. */
export function insertAtCursor(state: EditorState, snippet: string): EditorState {
  const start = Math.min(state.selectionStart, state.selectionEnd);
  const end = Math.max(state.selectionStart, state.selectionEnd);
  const content = state.content.slice(0, start) + snippet + state.content.slice(end);
  const cursor = start + snippet.length;
  return { content, selectionStart: cursor, selectionEnd: cursor };
}
