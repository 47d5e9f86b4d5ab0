// Wiring: chat pane + editor pane over the scriptchat HTTP API. The chat
// view holds no conversation state; after every action it refetches the
// transcript and re-renders from scratch.

import { ApiError, ScriptchatApi, buildTurnBody, canSend } from "./api.js";
import { renderCodeBlock } from "./codeview.js";
import { insertAtCursor, selectedText } from "./editor.js";
import { DEFAULT_ICONIFY_THRESHOLD, projectTranscript, type TranscriptItem } from "./transcript.js";

const API_BASE = (window as { SCRIPTCHAT_API?: string }).SCRIPTCHAT_API ?? "http://127.0.0.1:8080";
const PERSONA = (window as { SCRIPTCHAT_PERSONA?: string }).SCRIPTCHAT_PERSONA ?? "socrates-final";

const api = new ScriptchatApi(API_BASE);

const chatPane = document.getElementById("chat") as HTMLDivElement;
const statusLine = document.getElementById("status") as HTMLDivElement;
const input = document.getElementById("message") as HTMLTextAreaElement;
const sendButton = document.getElementById("send") as HTMLButtonElement;
const retryButton = document.getElementById("retry") as HTMLButtonElement;
const resetButton = document.getElementById("reset") as HTMLButtonElement;
const attachButton = document.getElementById("attach") as HTMLButtonElement;
const attachmentChip = document.getElementById("attachment") as HTMLDivElement;
const editor = document.getElementById("editor") as HTMLTextAreaElement;
const tagLanguageToggle = document.getElementById("tag-language") as HTMLInputElement;
const languageField = document.getElementById("language") as HTMLInputElement;

let sessionId: string | null = null;
let inFlight = false;
let attachedSelection: string | null = null;

function setStatus(text: string, isError = false): void {
  statusLine.textContent = text;
  statusLine.classList.toggle("error", isError);
}

function updateControls(): void {
  sendButton.disabled = !canSend(input.value, attachedSelection, inFlight) || sessionId === null;
  retryButton.disabled = inFlight || sessionId === null;
  resetButton.disabled = inFlight || sessionId === null;
  attachmentChip.hidden = attachedSelection === null;
  if (attachedSelection !== null) {
    const lines = attachedSelection.split("\n").filter((l) => l.length > 0).length;
    attachmentChip.textContent = `attached selection (${lines} line${lines === 1 ? "" : "s"}) ✕`;
  }
}

function insertIntoEditor(body: string): void {
  const next = insertAtCursor(
    { content: editor.value, selectionStart: editor.selectionStart, selectionEnd: editor.selectionEnd },
    body,
  );
  editor.value = next.content;
  editor.selectionStart = next.selectionStart;
  editor.selectionEnd = next.selectionEnd;
  editor.focus();
}

const codeActions = {
  onCopy(body: string): void {
    void navigator.clipboard.writeText(body).catch(() => setStatus("clipboard unavailable", true));
  },
  onInsert(body: string): void {
    insertIntoEditor(body);
  },
};

function renderItems(items: TranscriptItem[]): void {
  chatPane.replaceChildren();
  for (const item of items) {
    if (item.kind === "reset-divider") {
      const divider = document.createElement("div");
      divider.className = "divider";
      divider.textContent = "— conversation context reset —";
      chatPane.appendChild(divider);
      continue;
    }
    if (item.kind === "retry-note") {
      const note = document.createElement("div");
      note.className = "retry-note";
      note.textContent = "↻ answer regenerated";
      chatPane.appendChild(note);
      continue;
    }
    const message = item.message;
    const bubble = document.createElement("div");
    bubble.className = `bubble ${message.role}`;
    if (message.superseded) bubble.classList.add("superseded");
    if (message.greeting) bubble.classList.add("greeting");
    for (const part of message.parts) {
      if (part.kind === "text") {
        const p = document.createElement("div");
        p.className = "bubble-text";
        p.textContent = part.text;
        bubble.appendChild(p);
      } else {
        bubble.appendChild(renderCodeBlock(part.block, codeActions));
      }
    }
    chatPane.appendChild(bubble);
  }
  chatPane.scrollTop = chatPane.scrollHeight;
}

async function refreshTranscript(): Promise<void> {
  if (sessionId === null) return;
  const transcript = await api.transcript(sessionId);
  renderItems(projectTranscript(transcript, DEFAULT_ICONIFY_THRESHOLD));
}

async function withFlight(action: () => Promise<void>): Promise<void> {
  inFlight = true;
  updateControls();
  try {
    await action();
    setStatus("ready");
  } catch (error) {
    if (error instanceof ApiError) {
      setStatus(`${error.status}: ${error.message}${error.retryable ? " (try again)" : ""}`, true);
    } else {
      setStatus(String(error), true);
    }
  } finally {
    inFlight = false;
    // whatever happened, the service transcript is the truth
    await refreshTranscript().catch(() => undefined);
    updateControls();
  }
}

sendButton.addEventListener("click", () => {
  void withFlight(async () => {
    const body = buildTurnBody(
      input.value,
      attachedSelection,
      languageField.value.trim() || null,
      tagLanguageToggle.checked,
    );
    await api.postTurn(sessionId as string, body);
    input.value = "";
    attachedSelection = null;
  });
});

retryButton.addEventListener("click", () => {
  void withFlight(async () => {
    await api.retry(sessionId as string);
  });
});

resetButton.addEventListener("click", () => {
  void withFlight(async () => {
    await api.reset(sessionId as string);
  });
});

attachButton.addEventListener("click", () => {
  const selection = selectedText({
    content: editor.value,
    selectionStart: editor.selectionStart,
    selectionEnd: editor.selectionEnd,
  });
  attachedSelection = selection.length > 0 ? selection : null;
  if (attachedSelection === null) setStatus("select code in the editor first", true);
  updateControls();
});

attachmentChip.addEventListener("click", () => {
  attachedSelection = null;
  updateControls();
});

input.addEventListener("input", updateControls);

async function start(): Promise<void> {
  setStatus("connecting…");
  try {
    const session = await api.createSession(PERSONA);
    sessionId = session.session_id;
    setStatus(`session ${session.session_id.slice(0, 8)} · persona ${session.persona}`);
    await refreshTranscript();
  } catch (error) {
    setStatus(`cannot reach service at ${API_BASE}: ${String(error)}`, true);
  }
  updateControls();
}

void start();
