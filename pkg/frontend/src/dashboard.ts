/**
 * Learner dashboard: one row per chapter with the current mastery level,
 * attempt history, lock state, a re-evaluation button, and the transcript
 * upload control. The table re-renders from fresh server data after every
 * change; nothing on it is computed client-side.
 */

import { ApiError, MetacqClient, OlmRow } from "./api.js";
import { clear, displayMastery, el, formatMarks } from "./ui.js";

function readFileBytes(file: File): Promise<Uint8Array> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onerror = () => reject(reader.error);
    reader.onload = () => resolve(new Uint8Array(reader.result as ArrayBuffer));
    reader.readAsArrayBuffer(file);
  });
}

export interface DashboardOptions {
  onRead?: (chapterId: string) => void;
  onPractice?: (chapterId: string) => void;
}

export class Dashboard {
  readonly root: HTMLElement;
  private readonly tableBody: HTMLElement;
  private readonly status: HTMLElement;
  private readonly fileInput: HTMLInputElement;
  private readonly uploadButton: HTMLButtonElement;
  private busy = false;

  constructor(
    private readonly client: MetacqClient,
    readonly learnerId: string,
    private readonly options: DashboardOptions = {},
  ) {
    this.tableBody = el("tbody", {});
    this.status = el("p", { class: "upload-status" });
    this.fileInput = el("input", {
      type: "file",
      class: "upload-file",
      accept: ".json,.metacq.json",
    });
    this.uploadButton = el("button", { type: "button", class: "upload" }, "Upload");
    this.uploadButton.addEventListener("click", () => void this.uploadSelected());
    this.root = el(
      "section",
      { class: "dashboard" },
      el("h2", {}, "Current progress"),
      el(
        "table",
        { class: "olm" },
        el(
          "thead",
          {},
          el(
            "tr",
            {},
            el("th", {}, "chapter"),
            el("th", {}, "policy"),
            el("th", {}, "level"),
            el("th", {}, "history"),
            el("th", {}, "actions"),
          ),
        ),
        this.tableBody,
      ),
      el(
        "div",
        { class: "upload-box" },
        el("label", {}, "Record a finished session: ", this.fileInput),
        this.uploadButton,
        this.status,
      ),
    );
  }

  /** Reloads the model from the server and re-renders every row. */
  async refresh(): Promise<void> {
    const view = await this.client.olm(this.learnerId);
    clear(this.tableBody);
    for (const row of view.chapters) {
      this.tableBody.append(this.renderRow(row));
    }
  }

  private renderRow(row: OlmRow): HTMLElement {
    const title = el(
      "td",
      { class: row.unlocked ? "chapter" : "chapter locked" },
      `${row.ordinal}. ${row.title}${row.unlocked ? "" : " \u{1F512}"}`,
    );

    const history = el("td", {});
    if (row.attempts.length) {
      const list = el("ul", { class: "attempts" });
      for (const attempt of row.attempts) {
        list.append(
          el(
            "li",
            {},
            `${attempt.timestamp}: ${formatMarks(attempt.total_marks)} marks ` +
              `(${displayMastery(attempt.mastery)})`,
          ),
        );
      }
      history.append(
        el(
          "details",
          {},
          el("summary", {}, `${row.attempts.length} attempt(s)`),
          list,
        ),
      );
    } else {
      history.append("no attempts");
    }

    const actions = el("td", { class: "actions" });
    const read = el("button", { type: "button", class: "read" }, "Read");
    read.addEventListener("click", () => this.options.onRead?.(row.chapter_id));
    actions.append(read);

    const practice = el("button", { type: "button", class: "practice" }, "Practice");
    practice.disabled = !row.unlocked;
    practice.addEventListener("click", () => this.options.onPractice?.(row.chapter_id));
    actions.append(practice);

    if (row.attempts.length) {
      const reeval = el("button", { type: "button", class: "reevaluate" }, "Re-evaluate");
      reeval.disabled = row.reevaluation_open;
      reeval.addEventListener("click", () => void this.reevaluate(row.chapter_id));
      actions.append(reeval);
    }
    if (row.reevaluation_open) {
      actions.append(el("span", { class: "reeval-open" }, "re-evaluation open"));
    }

    return el(
      "tr",
      { "data-chapter": row.chapter_id },
      title,
      el("td", { class: "policy" }, row.policy),
      el("td", { class: "level" }, displayMastery(row.current)),
      history,
      actions,
    );
  }

  private async reevaluate(chapterId: string): Promise<void> {
    if (this.busy) {
      return;
    }
    this.busy = true;
    try {
      await this.client.requestReevaluation(this.learnerId, chapterId);
      this.setStatus(`re-evaluation open for ${chapterId}`, false);
      await this.refresh();
    } catch (error) {
      this.showError(error);
    } finally {
      this.busy = false;
    }
  }

  /** Uploads the chosen transcript file and refreshes the row in place. */
  async uploadSelected(): Promise<void> {
    const file = this.fileInput.files?.[0];
    if (!file) {
      this.setStatus("choose a transcript file first", true);
      return;
    }
    const bytes = await readFileBytes(file);
    await this.uploadBytes(bytes, file.name);
  }

  async uploadBytes(bytes: Uint8Array, filename: string): Promise<void> {
    if (this.busy) {
      return;
    }
    this.busy = true;
    this.uploadButton.disabled = true;
    try {
      const outcome = await this.client.uploadTranscript(
        this.learnerId,
        bytes,
        filename,
      );
      this.setStatus(
        `recorded: ${outcome.chapter_id} is now ${displayMastery(outcome.current)}`,
        false,
      );
      await this.refresh();
    } catch (error) {
      this.showError(error);
    } finally {
      this.busy = false;
      this.uploadButton.disabled = false;
    }
  }

  private showError(error: unknown): void {
    const text =
      error instanceof ApiError
        ? `${error.code}: ${error.message}`
        : String(error);
    this.setStatus(text, true);
  }

  private setStatus(text: string, isError: boolean): void {
    this.status.textContent = text;
    this.status.className = isError ? "upload-status error" : "upload-status";
  }
}
