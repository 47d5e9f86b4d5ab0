// DOM builders for code in the chat pane: short blocks render inline, long
// ones as a chip that expands into a viewer with copy and insert actions.

import type { CodeBlockView } from "./transcript.js";

export interface CodeActions {
  onCopy(body: string): void;
  onInsert(body: string): void;
}

function actionBar(block: CodeBlockView, actions: CodeActions): HTMLDivElement {
  const bar = document.createElement("div");
  bar.className = "code-actions";

  const copyButton = document.createElement("button");
  copyButton.textContent = "Copy";
  copyButton.title = "Copy code to clipboard";
  copyButton.addEventListener("click", (event) => {
    event.stopPropagation();
    actions.onCopy(block.body);
    copyButton.textContent = "Copied!";
    setTimeout(() => {
      copyButton.textContent = "Copy";
    }, 1500);
  });

  const insertButton = document.createElement("button");
  insertButton.textContent = "To editor";
  insertButton.title = "Insert code at the editor cursor";
  insertButton.addEventListener("click", (event) => {
    event.stopPropagation();
    actions.onInsert(block.body);
  });

  bar.append(copyButton, insertButton);
  return bar;
}

function codePre(block: CodeBlockView): HTMLPreElement {
  const pre = document.createElement("pre");
  pre.className = "code-body";
  const code = document.createElement("code");
  code.textContent = block.body;
  pre.appendChild(code);
  return pre;
}

export function renderCodeBlock(block: CodeBlockView, actions: CodeActions): HTMLElement {
  const container = document.createElement("div");
  container.className = "code-block";

  if (!block.iconified) {
    container.append(codePre(block), actionBar(block, actions));
    return container;
  }

  // long block: chip first, viewer revealed on demand
  const chip = document.createElement("button");
  chip.className = "code-chip";
  const label = block.language ? `${block.language} · ` : "";
  chip.textContent = `⟨/⟩ ${label}${block.lineCount} lines`;
  chip.title = "Show code";

  const viewer = document.createElement("div");
  viewer.className = "code-viewer";
  viewer.hidden = true;
  viewer.append(codePre(block), actionBar(block, actions));

  chip.addEventListener("click", () => {
    viewer.hidden = !viewer.hidden;
    chip.classList.toggle("expanded", !viewer.hidden);
  });

  container.append(chip, viewer);
  return container;
}
