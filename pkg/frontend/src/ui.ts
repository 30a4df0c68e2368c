/** Small DOM and formatting helpers shared by the panes. */

type Child = Node | string;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) {
    node.removeChild(node.firstChild);
  }
}

/** Marks render without trailing zeros: 1.5, 2, 0.5. */
export function formatMarks(value: number): string {
  return String(value);
}

/** "NotQualified" is shown to learners as "not passed". */
export function displayMastery(label: string): string {
  return label === "NotQualified" ? "not passed" : label;
}

export function attainableText(attainable: number, perQuestion: number): string {
  return `attainable: ${formatMarks(attainable)} / ${formatMarks(perQuestion)}`;
}
