/**
 * Wire types for the infusion server's JSON API, matching the shapes the
 * server actually emits (volumes/rates are numbers with two decimals).
 */

export interface Limits {
  max_volume_ml: number;
  min_rate_ml_h: number;
  max_rate_ml_h: number;
}

export interface IndexPayload {
  volume_ml: number;
  rate_ml_h: number;
  version: number;
}

export type PumpPhase = "idle" | "infusing" | "completed";

export interface PatientStatus {
  patient_id: string;
  name: string;
  phase: PumpPhase;
  limits: Limits;
  index: IndexPayload;
  pending_proposal: { volume_ml: number; rate_ml_h: number } | null;
  delivered_ml: number;
  pct_complete: number;
  last_poll_age_s: number | null;
}

export interface LoginOk {
  first_name: string;
  last_name: string;
  institution: string;
  token: string;
}

export interface HistoryEntry {
  seq: number;
  t_ms: number;
  patient_id: string;
  event: string;
  payload: Record<string, unknown>;
}

export interface SetIndexOk {
  index: IndexPayload;
}

export interface ResolveOk {
  outcome: "approved" | "rejected";
  index?: IndexPayload;
}

export interface ErrorBody {
  error: string;
  message: string;
}
