#!/usr/bin/env node
/**
 * report --kind <figure> --in <csv...> --out <img>
 *
 * Figure kinds: traffic, latency_sla, throughput, gpu_util, comparison.
 * Inputs are swapsim CSVs: trace CSVs for traffic, sweep_summary.csv for the
 * bar charts (plus per-cell requests.csv for the latency panel), and
 * comparison.csv for the gap chart. Output is an SVG.
 */

import { CsvError } from './csv.js'
import { FigureKind, FigureSpec, KINDS } from './figures.js'
import { render } from './render.js'

export function parseArgs(argv: string[]): FigureSpec {
  let kind: string | undefined
  const inputs: string[] = []
  let out: string | undefined
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i]
    if (arg === '--kind') kind = argv[++i]
    else if (arg === '--in') {
      while (i + 1 < argv.length && !argv[i + 1].startsWith('--')) inputs.push(argv[++i])
    } else if (arg === '--out') out = argv[++i]
    else throw new CsvError(`unknown argument '${arg}'`)
  }
  if (!kind || !KINDS.includes(kind as FigureKind)) {
    throw new CsvError(`--kind must be one of ${KINDS.join('/')}, got '${kind ?? ''}'`)
  }
  if (inputs.length === 0) throw new CsvError('--in requires at least one CSV path')
  if (!out) throw new CsvError('--out is required')
  return { kind: kind as FigureKind, inputs, out }
}

export function main(argv: string[]): number {
  let spec: FigureSpec
  try {
    spec = parseArgs(argv)
  } catch (err) {
    console.error(`usage: report --kind <${KINDS.join('|')}> --in <csv...> --out <img>`)
    console.error(String(err instanceof Error ? err.message : err))
    return 2
  }
  try {
    const svg = render(spec)
    console.log(`${spec.kind} -> ${spec.out} (${svg.length} bytes)`)
    return 0
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`)
    return 1
  }
}

import { pathToFileURL } from 'url'

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)))
}
