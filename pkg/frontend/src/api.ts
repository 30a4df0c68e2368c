/**
 * Typed HTTP client for the tutoring service.
 *
 * Every shape here mirrors a server response verbatim; the client adds no
 * derived fields and does no scoring of its own. Question payloads never
 * carry the correct answer, so nothing in this module can leak it.
 */

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface ChapterInfo {
  id: string;
  title: string;
  ordinal: number;
  policy: string;
  unlocked: boolean;
}

export interface ChapterContent {
  id: string;
  title: string;
  content: string;
}

export interface SessionInfo {
  session_id: string;
  learner_id: string;
  chapter_id: string;
  policy: string;
  questions_total: number;
  marks_per_question: number;
  started_at: string;
}

export interface QuestionView {
  session_id: string;
  question_number: number;
  questions_total: number;
  stem: string;
  options: string[];
  attainable: number;
  hints_remaining: number;
  running_total: number;
}

export interface HintView {
  session_id: string;
  hint: string;
  tier: number;
  attainable: number;
  hints_remaining: number;
}

export interface AnswerView {
  session_id: string;
  correct: boolean;
  marks_earned: number;
  feedback: string;
  running_total: number;
  answered: number;
  questions_total: number;
  session_complete: boolean;
}

export interface QuestionOutcome {
  index: number;
  marks: number;
  hints_used: number;
  correct: boolean;
}

export interface SessionResultView {
  session_id: string;
  total_marks: number;
  max_marks: number;
  mastery: string;
  per_question: QuestionOutcome[];
}

export interface AttemptView {
  session_id: string;
  total_marks: number;
  mastery: string;
  timestamp: string;
}

export interface OlmRow {
  chapter_id: string;
  title: string;
  ordinal: number;
  policy: string;
  current: string;
  unlocked: boolean;
  reevaluation_open: boolean;
  attempts: AttemptView[];
}

export interface OlmView {
  learner_id: string;
  chapters: OlmRow[];
}

export interface UploadOutcome {
  learner_id: string;
  chapter_id: string;
  current: string;
  reevaluation_open: boolean;
  attempts: AttemptView[];
}

export interface ReevaluationOutcome {
  learner_id: string;
  chapter_id: string;
  current: string;
  reevaluation_open: boolean;
}

export interface TranscriptFile {
  filename: string;
  bytes: Uint8Array<ArrayBuffer>;
}

/** Builds a single-file multipart body without relying on FormData. */
function multipartBody(
  field: string,
  filename: string,
  bytes: Uint8Array,
): { contentType: string; body: Uint8Array<ArrayBuffer> } {
  const boundary = "----metacq-" + Math.random().toString(36).slice(2);
  const encoder = new TextEncoder();
  const head = encoder.encode(
    `--${boundary}\r\n` +
      `Content-Disposition: form-data; name="${field}"; filename="${filename}"\r\n` +
      `Content-Type: application/json\r\n\r\n`,
  );
  const tail = encoder.encode(`\r\n--${boundary}--\r\n`);
  const body = new Uint8Array(head.length + bytes.length + tail.length);
  body.set(head, 0);
  body.set(bytes, head.length);
  body.set(tail, head.length + bytes.length);
  return { contentType: `multipart/form-data; boundary=${boundary}`, body };
}

export class MetacqClient {
  constructor(readonly baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      throw await this.toError(response);
    }
    return (await response.json()) as T;
  }

  private async toError(response: Response): Promise<ApiError> {
    let code = "HttpError";
    let message = `HTTP ${response.status}`;
    try {
      const doc = (await response.json()) as { code?: unknown; message?: unknown };
      if (typeof doc.code === "string") code = doc.code;
      if (typeof doc.message === "string") message = doc.message;
    } catch {
      // non-JSON error body; keep the generic message
    }
    return new ApiError(code, message, response.status);
  }

  chapters(learnerId?: string): Promise<{ chapters: ChapterInfo[] }> {
    const query = learnerId
      ? `?learner_id=${encodeURIComponent(learnerId)}`
      : "";
    return this.request("GET", `/chapters${query}`);
  }

  chapterContent(chapterId: string): Promise<ChapterContent> {
    return this.request("GET", `/chapters/${encodeURIComponent(chapterId)}/content`);
  }

  olm(learnerId: string): Promise<OlmView> {
    return this.request("GET", `/learners/${encodeURIComponent(learnerId)}/olm`);
  }

  openSession(learnerId: string, chapterId: string): Promise<SessionInfo> {
    return this.request(
      "POST",
      `/learners/${encodeURIComponent(learnerId)}/sessions`,
      { chapter_id: chapterId },
    );
  }

  nextQuestion(sessionId: string): Promise<QuestionView> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/question`);
  }

  requestHint(sessionId: string): Promise<HintView> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/hint`);
  }

  submitAnswer(sessionId: string, optionIndex: number): Promise<AnswerView> {
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/answer`,
      { option_index: optionIndex },
    );
  }

  finalize(sessionId: string): Promise<SessionResultView> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/finalize`);
  }

  async downloadTranscript(sessionId: string): Promise<TranscriptFile> {
    const response = await fetch(
      `${this.baseUrl}/sessions/${encodeURIComponent(sessionId)}/transcript`,
    );
    if (!response.ok) {
      throw await this.toError(response);
    }
    const disposition = response.headers.get("content-disposition") ?? "";
    const match = /filename="([^"]+)"/.exec(disposition);
    return {
      filename: match?.[1] ?? `${sessionId}.metacq.json`,
      bytes: new Uint8Array(await response.arrayBuffer()),
    };
  }

  async uploadTranscript(
    learnerId: string,
    bytes: Uint8Array,
    filename = "transcript.metacq.json",
  ): Promise<UploadOutcome> {
    const { contentType, body } = multipartBody("file", filename, bytes);
    const response = await fetch(
      `${this.baseUrl}/learners/${encodeURIComponent(learnerId)}/olm/upload`,
      { method: "POST", headers: { "content-type": contentType }, body },
    );
    if (!response.ok) {
      throw await this.toError(response);
    }
    return (await response.json()) as UploadOutcome;
  }

  requestReevaluation(
    learnerId: string,
    chapterId: string,
  ): Promise<ReevaluationOutcome> {
    return this.request(
      "POST",
      `/learners/${encodeURIComponent(learnerId)}/olm/` +
        `${encodeURIComponent(chapterId)}/reevaluate`,
    );
  }
}
