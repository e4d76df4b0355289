import Papa from "papaparse";

/** One sweep CSV row. Rows with status !== "ok" keep their grid position but
 * carry no rate; curves must show a visible break there. */
export interface SweepRow {
  n: number;
  nC: number;
  l: number;
  mT: number;
  mR: number;
  snrDb: number;
  epsilon: number;
  bound: string;
  rateBpcu: number | null;
  rateNpcu: number | null;
  stdErrBpcu: number | null;
  status: string;
}

export class SchemaError extends Error {
  constructor(
    message: string,
    public readonly column?: string,
  ) {
    super(message);
    this.name = "SchemaError";
  }
}

const REQUIRED_COLUMNS = [
  "n",
  "n_c",
  "l",
  "m_t",
  "m_r",
  "snr_db",
  "epsilon",
  "bound",
  "m_active_opt",
  "rate_npcu",
  "rate_bpcu",
  "mc_std_err",
  "samples",
  "seed",
  "status",
];

const LN2 = Math.log(2);

function requireNumber(
  record: Record<string, string>,
  column: string,
  line: number,
): number {
  const raw = record[column];
  const value = Number(raw);
  if (raw === "" || raw === undefined || !Number.isFinite(value)) {
    throw new SchemaError(
      `row ${line}: column "${column}" is not a finite number (got ${JSON.stringify(raw)})`,
      column,
    );
  }
  return value;
}

/** Parse and validate sweep CSV text. Throws SchemaError naming the
 * offending column on any contract violation. */
export function parseSweepCsv(text: string): SweepRow[] {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new SchemaError(`CSV parse error on row ${e.row}: ${e.message}`);
  }
  const header = parsed.meta.fields ?? [];
  for (const column of REQUIRED_COLUMNS) {
    if (!header.includes(column)) {
      throw new SchemaError(`missing required column "${column}"`, column);
    }
  }
  return parsed.data.map((record, i) => {
    const line = i + 2; // 1-based, after the header
    const status = record["status"];
    if (!status) {
      throw new SchemaError(`row ${line}: column "status" is empty`, "status");
    }
    const ok = status === "ok";
    const row: SweepRow = {
      n: requireNumber(record, "n", line),
      nC: requireNumber(record, "n_c", line),
      l: requireNumber(record, "l", line),
      mT: requireNumber(record, "m_t", line),
      mR: requireNumber(record, "m_r", line),
      snrDb: requireNumber(record, "snr_db", line),
      epsilon: requireNumber(record, "epsilon", line),
      bound: record["bound"] ?? "",
      rateBpcu: ok ? requireNumber(record, "rate_bpcu", line) : null,
      // the redundant nat-rate column must still be numeric on ok rows
      rateNpcu: ok ? requireNumber(record, "rate_npcu", line) : null,
      // mc_std_err is reported in nats per channel use
      stdErrBpcu: ok ? requireNumber(record, "mc_std_err", line) / LN2 : null,
      status,
    };
    if (row.bound === "") {
      throw new SchemaError(`row ${line}: column "bound" is empty`, "bound");
    }
    if (row.nC <= 0) {
      throw new SchemaError(
        `row ${line}: column "n_c" must be positive for a log axis`,
        "n_c",
      );
    }
    return row;
  });
}
