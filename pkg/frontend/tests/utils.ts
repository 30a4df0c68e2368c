/** Shared helpers for driving the client against the live service. */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { inject } from "vitest";

export function baseUrl(): string {
  return inject("baseUrl" as never) as string;
}

interface BankQuestion {
  stem: string;
  correct_index: number;
}

/**
 * Ground truth for grading comes from the packaged question bank file on
 * disk. The client itself never sees these numbers; only the test uses
 * them to decide which option button to press.
 */
export function correctAnswersByStem(): Map<string, number> {
  // the test runner's cwd is frontend/, next to the engine's src tree
  const path = join(process.cwd(), "..", "src", "metacq", "data", "bank.json");
  const doc = JSON.parse(readFileSync(path, "utf-8")) as {
    chapters: { questions: BankQuestion[] }[];
  };
  const byStem = new Map<string, number>();
  for (const chapter of doc.chapters) {
    for (const question of chapter.questions) {
      byStem.set(question.stem, question.correct_index);
    }
  }
  return byStem;
}

/** Polls until `probe` returns a truthy value; jsdom has no waitFor. */
export async function until<T>(
  probe: () => T | null | undefined | false,
  what = "condition",
  timeoutMs = 10_000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const value = probe();
    if (value) {
      return value;
    }
    if (Date.now() > deadline) {
      throw new Error(`timed out waiting for ${what}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 20));
  }
}

export function submit(form: HTMLFormElement): void {
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}
