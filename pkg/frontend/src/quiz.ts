/**
 * Chat-style quiz pane.
 *
 * Questions, hints and feedback appear as alternating chat messages. Options
 * are buttons; hints are requested by typing the literal command "?tips"
 * into the composer, mirroring a chatbot conversation. All numbers shown
 * (attainable marks, running total, final result) come straight from server
 * responses; the pane holds no scoring logic.
 */

import {
  ApiError,
  MetacqClient,
  QuestionView,
  SessionInfo,
  SessionResultView,
} from "./api.js";
import { attainableText, clear, displayMastery, el, formatMarks } from "./ui.js";

export const TIPS_COMMAND = "?tips";

export interface QuizOptions {
  /** Called once the result message is shown. */
  onFinished?: (result: SessionResultView) => void;
}

export class QuizPane {
  readonly root: HTMLElement;
  /** Bytes of the signed transcript, kept after a download for re-upload. */
  lastTranscript: Uint8Array<ArrayBuffer> | null = null;
  result: SessionResultView | null = null;

  private readonly chat: HTMLElement;
  private readonly progress: HTMLElement;
  private readonly totalBadge: HTMLElement;
  private readonly composer: HTMLFormElement;
  private readonly input: HTMLInputElement;
  private readonly send: HTMLButtonElement;
  private attainableBadge: HTMLElement | null = null;
  private optionButtons: HTMLButtonElement[] = [];
  private pending = false;

  constructor(
    private readonly client: MetacqClient,
    readonly session: SessionInfo,
    private readonly options: QuizOptions = {},
  ) {
    this.progress = el("span", { class: "progress" });
    this.totalBadge = el("span", { class: "running-total" }, "total: 0");
    this.input = el("input", {
      class: "composer-input",
      type: "text",
      placeholder: `type ${TIPS_COMMAND} for a hint`,
    });
    this.send = el("button", { type: "submit" }, "Send");
    this.composer = el("form", { class: "composer" }, this.input, this.send);
    this.composer.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.handleCommand();
    });
    this.chat = el("div", { class: "chat" });
    this.root = el(
      "section",
      { class: "quiz" },
      el(
        "header",
        { class: "quiz-header" },
        el("strong", {}, `Practice: ${session.chapter_id}`),
        this.progress,
        this.totalBadge,
      ),
      this.chat,
      this.composer,
    );
  }

  /** Fetches and renders the first question. */
  async begin(): Promise<void> {
    await this.fetchQuestion();
  }

  private say(kind: string, ...children: (Node | string)[]): HTMLElement {
    const bubble = el("div", { class: `bubble ${kind}` }, ...children);
    this.chat.append(bubble);
    return bubble;
  }

  private setPending(value: boolean): void {
    this.pending = value;
    this.send.disabled = value || this.input.disabled;
    for (const button of this.optionButtons) {
      button.disabled = value || button.dataset.answered === "yes";
    }
  }

  private async fetchQuestion(): Promise<void> {
    this.setPending(true);
    try {
      const question = await this.client.nextQuestion(this.session.session_id);
      this.renderQuestion(question);
    } catch (error) {
      this.sayError(error);
    } finally {
      this.setPending(false);
    }
  }

  private renderQuestion(question: QuestionView): void {
    this.progress.textContent = `question ${question.question_number} of ${question.questions_total}`;
    this.totalBadge.textContent = `total: ${formatMarks(question.running_total)}`;
    this.input.disabled = false;
    this.input.placeholder = `type ${TIPS_COMMAND} for a hint`;

    this.attainableBadge = el(
      "span",
      { class: "attainable" },
      attainableText(question.attainable, this.session.marks_per_question),
    );
    const list = el("div", { class: "options" });
    this.optionButtons = question.options.map((text, index) => {
      const button = el(
        "button",
        { type: "button", class: "option", "data-index": String(index) },
        `${"ABC"[index] ?? index}) ${text}`,
      );
      button.addEventListener("click", () => void this.answer(index));
      list.append(button);
      return button;
    });
    this.say(
      "question",
      el("p", { class: "stem" }, question.stem),
      list,
      this.attainableBadge,
    );
  }

  private async handleCommand(): Promise<void> {
    if (this.pending || this.input.disabled) {
      return;
    }
    const text = this.input.value.trim();
    this.input.value = "";
    if (!text) {
      return;
    }
    this.say("learner", text);
    if (text !== TIPS_COMMAND) {
      this.say(
        "system",
        `Unknown command. Type ${TIPS_COMMAND} for a hint, or pick an option.`,
      );
      return;
    }
    this.setPending(true);
    try {
      const hint = await this.client.requestHint(this.session.session_id);
      const attainable = attainableText(
        hint.attainable,
        this.session.marks_per_question,
      );
      if (this.attainableBadge) {
        this.attainableBadge.textContent = attainable;
      }
      this.say(
        "hint",
        el("p", {}, hint.hint),
        el("span", { class: "attainable" }, attainable),
        el("span", { class: "hints-left" }, `hints left: ${hint.hints_remaining}`),
      );
    } catch (error) {
      if (error instanceof ApiError && error.code === "HintsExhausted") {
        // the server said no; keep the composer out of action until the
        // next question so this reads as a disabled state
        this.input.disabled = true;
        this.input.placeholder = "no hints left on this question";
        this.send.disabled = true;
        this.say("system hints-exhausted", "No hints left on this question.");
      } else {
        this.sayError(error);
      }
    } finally {
      this.setPending(false);
    }
  }

  private async answer(index: number): Promise<void> {
    if (this.pending) {
      return;
    }
    this.setPending(true);
    try {
      const graded = await this.client.submitAnswer(this.session.session_id, index);
      for (const button of this.optionButtons) {
        button.dataset.answered = "yes";
        button.disabled = true;
      }
      this.totalBadge.textContent = `total: ${formatMarks(graded.running_total)}`;
      this.say(
        graded.correct ? "feedback correct" : "feedback incorrect",
        el("p", {}, graded.feedback),
        el(
          "span",
          { class: "marks-earned" },
          `marks: ${formatMarks(graded.marks_earned)}`,
        ),
      );
      this.setPending(false);
      if (graded.session_complete) {
        await this.finish();
      } else {
        await this.fetchQuestion();
      }
    } catch (error) {
      this.sayError(error);
      this.setPending(false);
    }
  }

  private async finish(): Promise<void> {
    this.setPending(true);
    try {
      const result = await this.client.finalize(this.session.session_id);
      this.result = result;
      this.input.disabled = true;
      this.send.disabled = true;
      this.input.placeholder = "session complete";
      const download = el(
        "button",
        { type: "button", class: "download" },
        "Download transcript",
      );
      download.addEventListener("click", () => void this.download());
      const breakdown = el("ul", { class: "breakdown" });
      for (const q of result.per_question) {
        breakdown.append(
          el(
            "li",
            {},
            `Q${q.index + 1}: ${formatMarks(q.marks)} marks, ` +
              `${q.hints_used} hints, ${q.correct ? "correct" : "incorrect"}`,
          ),
        );
      }
      this.say(
        "result",
        el(
          "p",
          { class: "result-line" },
          `Session complete: ${formatMarks(result.total_marks)} / ` +
            `${formatMarks(result.max_marks)} marks, ${displayMastery(result.mastery)}`,
        ),
        breakdown,
        download,
        el(
          "p",
          { class: "upload-reminder" },
          "Upload the transcript on your dashboard to record this attempt.",
        ),
      );
      this.options.onFinished?.(result);
    } catch (error) {
      this.sayError(error);
    } finally {
      this.setPending(false);
    }
  }

  /** Fetches the signed transcript and hands it to the browser. */
  async download(): Promise<void> {
    try {
      const file = await this.client.downloadTranscript(this.session.session_id);
      this.lastTranscript = file.bytes;
      if (typeof URL !== "undefined" && "createObjectURL" in URL) {
        const blob = new Blob([file.bytes], { type: "application/json" });
        const href = URL.createObjectURL(blob);
        const anchor = el("a", { href, download: file.filename });
        anchor.click();
        URL.revokeObjectURL(href);
      }
    } catch (error) {
      this.sayError(error);
    }
  }

  private sayError(error: unknown): void {
    const text =
      error instanceof ApiError
        ? `${error.code}: ${error.message}`
        : String(error);
    this.say("system error", text);
  }

  dispose(): void {
    clear(this.root);
  }
}
