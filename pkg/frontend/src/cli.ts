/**
 * figures CLI: aggregate CSV(s) in, SVG out.
 *
 *   node dist/cli.js --csv agg.csv[,agg2.csv] --out figure.svg [--cap 0.5]
 */

import { writeFileSync } from "fs";
import { renderFigure } from "./index";
import { SchemaError } from "./schema";

interface Args {
  csv: string[];
  out: string;
  cap?: number;
}

function parseArgs(argv: string[]): Args {
  let csv: string[] | undefined;
  let out: string | undefined;
  let cap: number | undefined;
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case "--csv":
        csv = argv[++i].split(",").map((p) => p.trim());
        break;
      case "--out":
        out = argv[++i];
        break;
      case "--cap":
        cap = Number(argv[++i]);
        if (Number.isNaN(cap) || cap <= 0) {
          throw new Error("--cap must be a positive number");
        }
        break;
      default:
        throw new Error(`unknown argument: ${argv[i]}`);
    }
  }
  if (!csv || csv.length === 0 || !out) {
    throw new Error("usage: figures --csv <path[,path]> --out <svg> [--cap <float>]");
  }
  return { csv, out, cap };
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    const { svg, geometry } = renderFigure(args.csv, { cap: args.cap });
    writeFileSync(args.out, svg, "utf-8");
    const bars = geometry.panels.reduce((sum, p) => sum + p.bars.length, 0);
    console.log(`${bars} bars over ${geometry.panels.length} panel(s) -> ${args.out}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError || err instanceof Error) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
