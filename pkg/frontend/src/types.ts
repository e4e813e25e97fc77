// Payload shapes of the workbench JSON API.

export interface TokenPayload {
  id: number;
  form: string;
  lemma: string;
  upos: string;
  xpos: string;
  feats: string[];
  head: number | null;
  deprel: string;
  misc: string[];
  orig: string | null; // second-script form
  changed: boolean; // differs from the pseudo-annotation
}

export interface SentencePayload {
  sent_id: string;
  batch: number | null;
  text: string;
  text_orig: string | null;
  editable: boolean;
  tokens: TokenPayload[];
  violations: string[];
}

export interface BatchRecordPayload {
  index: number;
  sentence_ids: string[];
  state: string;
  model_used: string;
  model_produced: string | null;
  report: ReportPayload | null;
}

export interface ProjectPayload {
  name: string;
  batch_size: number;
  model_versions: string[];
  batches: BatchRecordPayload[];
  remaining_pool: number;
  settings: { misc_orig_key: string; ignore_punct: boolean; strip_subtypes: boolean };
}

export interface ConfusionPayload {
  labels: string[];
  counts: number[][];
}

export interface ReportPayload {
  size: number;
  avg_word_count: number;
  edit_count: number;
  uas: number;
  las: number;
  confusion: ConfusionPayload;
  flags: { ignore_punct: boolean; strip_subtypes: boolean };
}

export interface TrendRow {
  batch: number;
  size: number;
  avg_word_count: number;
  uas: number;
  las: number;
  edit_count: number;
  state: string;
}

export interface JobPayload {
  id: string;
  kind: string;
  state: "running" | "done" | "failed";
  result: Record<string, unknown> | null;
  error: { code: string; message: string; details: unknown } | null;
}

export interface TokenPatchBody {
  head?: number;
  deprel?: string;
  upos?: string;
}
