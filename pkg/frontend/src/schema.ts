/**
 * Strict reader for the harness aggregate CSV.
 *
 * One line per method aggregate; the columns are fixed and every one is
 * required. A mismatch names the offending column so a schema drift in
 * either tool is caught immediately.
 */

export const AGGREGATE_COLUMNS = [
  "method",
  "direction",
  "bridge",
  "n",
  "K",
  "M",
  "replications",
  "mse_log",
  "mse_se",
  "zero_fraction",
] as const;

export interface AggregateRow {
  method: string;
  direction: string;
  bridge: string;
  n: number;
  K: number;
  M: number;
  replications: number;
  mseLog: number;
  mseSe: number;
  zeroFraction: number;
}

export class SchemaError extends Error {}

function parseNumber(field: string, raw: string, line: number): number {
  const value = Number(raw);
  if (raw.trim() === "" || Number.isNaN(value)) {
    throw new SchemaError(
      `line ${line}: column "${field}" is not numeric: ${JSON.stringify(raw)}`,
    );
  }
  return value;
}

export function parseAggregateCsv(text: string): AggregateRow[] {
  const lines = text.split("\n").filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV");
  }
  const header = lines[0].split(",");
  for (let i = 0; i < AGGREGATE_COLUMNS.length; i++) {
    if (header[i] !== AGGREGATE_COLUMNS[i]) {
      throw new SchemaError(
        `expected column ${i + 1} to be "${AGGREGATE_COLUMNS[i]}", ` +
          `found "${header[i] ?? "<missing>"}"`,
      );
    }
  }
  if (header.length !== AGGREGATE_COLUMNS.length) {
    throw new SchemaError(`unexpected extra column "${header[AGGREGATE_COLUMNS.length]}"`);
  }
  const rows: AggregateRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== AGGREGATE_COLUMNS.length) {
      throw new SchemaError(`line ${i + 1}: expected ${AGGREGATE_COLUMNS.length} fields, found ${parts.length}`);
    }
    rows.push({
      method: parts[0],
      direction: parts[1],
      bridge: parts[2],
      n: parseNumber("n", parts[3], i + 1),
      K: parseNumber("K", parts[4], i + 1),
      M: parseNumber("M", parts[5], i + 1),
      replications: parseNumber("replications", parts[6], i + 1),
      mseLog: parseNumber("mse_log", parts[7], i + 1),
      mseSe: parseNumber("mse_se", parts[8], i + 1),
      zeroFraction: parseNumber("zero_fraction", parts[9], i + 1),
    });
  }
  return rows;
}
