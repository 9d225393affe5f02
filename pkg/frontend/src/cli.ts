#!/usr/bin/env node
/**
 * plot --kind <stability|propagation|smoothing|decay|profiles> \
 *      --in report.csv [--in more.csv] --out figure.svg
 *
 * Exit codes: 0 written, 2 bad input (schema mismatch, empty CSV, unreadable
 * file, bad flags). On failure nothing is written.
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { PlotError } from "./csv";
import { FIGURE_KINDS, FigureKind } from "./figures";
import { render } from "./plot";

export function main(argv: string[]): number {
  try {
    const args = yargs(argv)
      .option("kind", {
        type: "string",
        choices: FIGURE_KINDS,
        demandOption: true,
        describe: "figure kind",
      })
      .option("in", {
        type: "string",
        array: true,
        demandOption: true,
        describe: "input CSV path(s); several only for profiles",
      })
      .option("out", {
        type: "string",
        demandOption: true,
        describe: "output SVG path",
      })
      .strict()
      .exitProcess(false)
      .fail((msg, err) => {
        throw new PlotError(msg ?? (err ? err.message : "bad arguments"));
      })
      .parseSync();
    const fig = render({
      kind: args.kind as FigureKind,
      inputs: args.in as string[],
      output: args.out,
    });
    console.log(`wrote ${args.out} (${fig.series.length} series)`);
    return 0;
  } catch (err) {
    if (err instanceof PlotError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(hideBin(process.argv)));
}
