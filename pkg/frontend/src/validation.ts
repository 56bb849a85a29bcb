/**
 * Client-side mirror of the server's prescription limit rule, for instant
 * form feedback. The server remains the enforcement point; this must
 * accept exactly the forms the server accepts for a given limits snapshot.
 *
 * The server compares exact two-decimal values, so all comparisons here
 * run on integer hundredths to keep float dust from flipping a boundary
 * case (e.g. 10.00 vs 10.01).
 */

import type { Limits } from "./types.js";

export type FormField = "volume_ml" | "rate_ml_h";

export interface Verdict {
  ok: boolean;
  /** Field to attach the message to when not ok. */
  field?: FormField;
  reason?: string;
}

/** Exact hundredths, or null when the value has more precision (or is not
 * a finite number at all) and therefore can't be sent on the wire. */
export function toHundredths(value: number): number | null {
  if (!Number.isFinite(value)) {
    return null;
  }
  const cents = Math.round(value * 100);
  // re-parse of the 2-decimal rendering must give the value back exactly
  return Number.parseFloat(value.toFixed(2)) === value ? cents : null;
}

export function validateIndexForm(
  volumeMl: number,
  rateMlH: number,
  limits: Limits,
): Verdict {
  const vol = toHundredths(volumeMl);
  if (vol === null) {
    return { ok: false, field: "volume_ml", reason: "volume must be a number with at most two decimals" };
  }
  const rate = toHundredths(rateMlH);
  if (rate === null) {
    return { ok: false, field: "rate_ml_h", reason: "rate must be a number with at most two decimals" };
  }
  const maxVol = Math.round(limits.max_volume_ml * 100);
  const minRate = Math.round(limits.min_rate_ml_h * 100);
  const maxRate = Math.round(limits.max_rate_ml_h * 100);

  if (vol <= 0) {
    return { ok: false, field: "volume_ml", reason: "volume must be greater than zero" };
  }
  if (vol > maxVol) {
    return { ok: false, field: "volume_ml", reason: `volume above profile maximum ${limits.max_volume_ml} mL` };
  }
  if (rate < minRate) {
    return { ok: false, field: "rate_ml_h", reason: `rate below profile minimum ${limits.min_rate_ml_h} mL/h` };
  }
  if (rate > maxRate) {
    return { ok: false, field: "rate_ml_h", reason: `rate above profile maximum ${limits.max_rate_ml_h} mL/h` };
  }
  return { ok: true };
}
