/**
 * Single-page app shell: learner sign-in, chapter reader, quiz pane, and
 * the progress dashboard, plus a cosmetic dark-mode toggle. The page talks
 * to exactly one backend, the tutoring service HTTP API.
 */

import { ApiError, MetacqClient } from "./api.js";
import { Dashboard } from "./dashboard.js";
import { QuizPane } from "./quiz.js";
import { clear, el } from "./ui.js";

export interface App {
  root: HTMLElement;
  client: MetacqClient;
  /** Set once a learner id has been entered. */
  dashboard: Dashboard | null;
  /** The pane for the currently running session, if any. */
  quiz: QuizPane | null;
  openLearner(learnerId: string): Promise<void>;
  startPractice(chapterId: string): Promise<void>;
  readChapter(chapterId: string): Promise<void>;
}

export function mountApp(root: HTMLElement, baseUrl: string): App {
  const client = new MetacqClient(baseUrl);

  const darkToggle = el(
    "button",
    { type: "button", class: "dark-toggle" },
    "switch to dark mode",
  );
  darkToggle.addEventListener("click", () => {
    const dark = document.body.classList.toggle("dark");
    darkToggle.textContent = dark ? "switch to light mode" : "switch to dark mode";
  });

  const learnerInput = el("input", {
    type: "text",
    class: "learner-id",
    placeholder: "learner id",
  });
  const learnerForm = el(
    "form",
    { class: "learner-form" },
    learnerInput,
    el("button", { type: "submit" }, "Open"),
  );

  const notice = el("p", { class: "notice" });
  const dashboardArea = el("div", { class: "dashboard-area" });
  const readerArea = el("article", { class: "reader" });
  const quizArea = el("div", { class: "quiz-area" });

  clear(root);
  root.append(
    el("header", { class: "top" }, el("h1", {}, "MetaCQ"), darkToggle),
    learnerForm,
    notice,
    dashboardArea,
    readerArea,
    quizArea,
  );

  const app: App = {
    root,
    client,
    dashboard: null,
    quiz: null,

    async openLearner(learnerId: string): Promise<void> {
      notice.textContent = "";
      const dashboard = new Dashboard(client, learnerId, {
        onRead: (chapterId) => void app.readChapter(chapterId),
        onPractice: (chapterId) => void app.startPractice(chapterId),
      });
      await dashboard.refresh();
      app.dashboard = dashboard;
      clear(dashboardArea);
      dashboardArea.append(dashboard.root);
    },

    async startPractice(chapterId: string): Promise<void> {
      if (!app.dashboard) {
        return;
      }
      notice.textContent = "";
      try {
        const session = await client.openSession(app.dashboard.learnerId, chapterId);
        const quiz = new QuizPane(client, session);
        app.quiz = quiz;
        clear(quizArea);
        quizArea.append(quiz.root);
        await quiz.begin();
      } catch (error) {
        notice.textContent =
          error instanceof ApiError
            ? `${error.code}: ${error.message}`
            : String(error);
        notice.className = "notice error";
      }
    },

    async readChapter(chapterId: string): Promise<void> {
      const doc = await client.chapterContent(chapterId);
      clear(readerArea);
      readerArea.append(
        el("h2", {}, doc.title),
        el("pre", { class: "content" }, doc.content),
      );
    },
  };

  learnerForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const learnerId = learnerInput.value.trim();
    if (learnerId) {
      void app.openLearner(learnerId);
    }
  });

  return app;
}

// auto-mount when loaded as the page script; tests mount explicitly
if (typeof document !== "undefined") {
  const host = document.getElementById("app");
  if (host) {
    const params = new URLSearchParams(window.location.search);
    mountApp(host, params.get("api") ?? "http://127.0.0.1:8000");
  }
}
