/**
 * Figure builders: each turns swapsim CSV rows into an ECharts option.
 *
 * Plots only re-arrange columns the simulator already computed; nothing is
 * re-derived here beyond display-level grouping and averaging.
 */

import { basename, dirname, join } from 'path'
import { existsSync, readFileSync } from 'fs'

import { CsvError, Row, groupMean, numeric, readCsv, requireColumns } from './csv.js'

export type FigureKind = 'traffic' | 'latency_sla' | 'throughput' | 'gpu_util' | 'comparison'

export interface FigureSpec {
  kind: FigureKind
  inputs: string[]
  out: string
  width?: number
  height?: number
}

export const KINDS: FigureKind[] = ['traffic', 'latency_sla', 'throughput', 'gpu_util', 'comparison']

const MODE_ORDER = ['cc', 'nocc']
const PALETTE = ['#c23531', '#2f4554', '#61a0a8', '#d48265', '#91c7ae', '#749f83']

function baseOption(title: string) {
  return {
    animation: false,
    color: PALETTE,
    title: { text: title, left: 'center', textStyle: { fontSize: 14 } },
    legend: { bottom: 0 },
    grid: { left: 60, right: 20, top: 40, bottom: 60 },
  }
}

/** Arrival counts per whole second; sums to the number of trace rows exactly. */
export function perSecondCounts(rows: Row[]): number[] {
  requireColumns(rows, ['arrival_s'], 'trace')
  let horizon = 0
  for (const row of rows) horizon = Math.max(horizon, Math.floor(numeric(row, 'arrival_s')))
  const counts = new Array<number>(horizon + 1).fill(0)
  for (const row of rows) counts[Math.floor(numeric(row, 'arrival_s'))] += 1
  return counts
}

function trafficOption(spec: FigureSpec) {
  const series = spec.inputs.map((path) => {
    const counts = perSecondCounts(readCsv(path))
    return {
      name: basename(path, '.csv'),
      type: 'line' as const,
      showSymbol: false,
      data: counts.map((c, second) => [second, c]),
    }
  })
  return {
    ...baseOption('Arrivals per second'),
    xAxis: { type: 'value', name: 'time (s)' },
    yAxis: { type: 'value', name: 'requests/s' },
    series,
  }
}

function summaryRows(paths: string[], columns: string[]): Row[] {
  const rows: Row[] = []
  for (const path of paths) {
    const fileRows = readCsv(path)
    requireColumns(fileRows, columns, path)
    rows.push(...fileRows)
  }
  return rows
}

function groupedBars(
  rows: Row[],
  xColumn: string,
  valueColumn: string,
  title: string,
  yName: string,
) {
  const categories = [...new Set(rows.map((r) => r[xColumn]))]
  const means = groupMean(rows, [xColumn, 'mode'], valueColumn)
  const modes = MODE_ORDER.filter((m) => rows.some((r) => r.mode === m))
  return {
    ...baseOption(title),
    xAxis: { type: 'category', data: categories, axisLabel: { interval: 0, rotate: 20 } },
    yAxis: { type: 'value', name: yName },
    series: modes.map((mode) => ({
      name: mode,
      type: 'bar' as const,
      data: categories.map((c) => round2(means.get(`${c}|${mode}`))),
    })),
  }
}

function round2(value: number | undefined): number | null {
  return value === undefined ? null : Math.round(value * 100) / 100
}

const SUMMARY_BASE = ['strategy', 'pattern', 'mean_rps', 'sla_s', 'mode', 'seed']

function throughputOption(spec: FigureSpec) {
  const rows = summaryRows(spec.inputs, [...SUMMARY_BASE, 'overall_throughput_rps'])
  return groupedBars(rows, 'strategy', 'overall_throughput_rps', 'Overall throughput', 'requests/s')
}

function gpuUtilOption(spec: FigureSpec) {
  const rows = summaryRows(spec.inputs, [...SUMMARY_BASE, 'gpu_util_pct'])
  return groupedBars(rows, 'strategy', 'gpu_util_pct', 'GPU utilization (inference share)', '%')
}

/** Cell metadata for a requests.csv, read from the config echo next to it. */
function cellMeta(requestsPath: string): { pattern: string; mode: string } {
  const echo = join(dirname(requestsPath), 'config.json')
  if (existsSync(echo)) {
    const doc = JSON.parse(readFileSync(echo, 'utf8'))
    return { pattern: doc?.traffic?.pattern ?? 'trace', mode: doc?.mode ?? 'unknown' }
  }
  const parts = basename(dirname(requestsPath)).split('__')
  return { pattern: parts[1] ?? 'unknown', mode: parts[4] ?? 'unknown' }
}

function latencySlaOption(spec: FigureSpec) {
  const summaries = spec.inputs.filter((p) => basename(p).includes('summary'))
  const requestFiles = spec.inputs.filter((p) => basename(p).includes('requests'))
  if (summaries.length === 0) {
    throw new CsvError('latency_sla needs a sweep_summary.csv input for the attainment panel')
  }
  const rows = summaryRows(summaries, [...SUMMARY_BASE, 'attainment_pct'])
  const slas = [...new Set(rows.map((r) => r.sla_s))]
  const patterns = [...new Set(rows.map((r) => r.pattern))]
  const categories = patterns.flatMap((p) => slas.map((s) => `${p} sla${Number(s)}`))
  const attainment = groupMean(rows, ['pattern', 'sla_s', 'mode'], 'attainment_pct')
  const modes = MODE_ORDER.filter((m) => rows.some((r) => r.mode === m))

  // Latency panel: mean fulfilled latency per cell, grouped by pattern.
  const latencySeries = []
  if (requestFiles.length > 0) {
    const byGroup = new Map<string, { total: number; count: number }>()
    for (const path of requestFiles) {
      const { pattern, mode } = cellMeta(path)
      const cellRows = readCsv(path)
      requireColumns(cellRows, ['latency_s', 'fulfilled'], path)
      for (const row of cellRows) {
        if (row.fulfilled !== 'true') continue
        const key = `${pattern}|${mode}`
        const entry = byGroup.get(key) ?? { total: 0, count: 0 }
        entry.total += numeric(row, 'latency_s')
        entry.count += 1
        byGroup.set(key, entry)
      }
    }
    for (const mode of modes) {
      latencySeries.push({
        name: `${mode} latency`,
        type: 'bar' as const,
        xAxisIndex: 1,
        yAxisIndex: 1,
        data: patterns.map((p) => {
          const entry = byGroup.get(`${p}|${mode}`)
          return entry && entry.count > 0 ? round2(entry.total / entry.count) : null
        }),
      })
    }
  }

  return {
    ...baseOption('SLA attainment and mean latency'),
    grid: [
      { left: 60, right: 20, top: 40, height: 150 },
      { left: 60, right: 20, top: 250, height: 130 },
    ],
    xAxis: [
      { type: 'category', gridIndex: 0, data: categories, axisLabel: { interval: 0, rotate: 30 } },
      { type: 'category', gridIndex: 1, data: patterns },
    ],
    yAxis: [
      { type: 'value', gridIndex: 0, name: 'attainment %', max: 100 },
      { type: 'value', gridIndex: 1, name: 'latency (s)' },
    ],
    series: [
      ...modes.map((mode) => ({
        name: mode,
        type: 'bar' as const,
        xAxisIndex: 0,
        yAxisIndex: 0,
        data: categories.map((c) => round2(attainment.get(`${c.split(' ')[0]}|${slaFor(c, rows)}|${mode}`))),
      })),
      ...latencySeries,
    ],
  }
}

function slaFor(category: string, rows: Row[]): string {
  const wanted = category.split(' sla')[1]
  for (const row of rows) {
    if (Number(row.sla_s) === Number(wanted)) return row.sla_s
  }
  return wanted
}

function comparisonOption(spec: FigureSpec) {
  const rows = summaryRows(spec.inputs, [
    'strategy',
    'pattern',
    'mean_rps',
    'sla_s',
    'seed',
    'throughput_gap_pct',
  ])
  const labels = rows.map(
    (r) => `${r.strategy}/${r.pattern}/m${Number(r.mean_rps)}/sla${Number(r.sla_s)}/s${r.seed}`,
  )
  const gaps = rows.map((r) => (r.throughput_gap_pct === '' ? null : round2(numeric(r, 'throughput_gap_pct'))))
  return {
    ...baseOption('No-CC over CC throughput gap per cell'),
    grid: { left: 60, right: 20, top: 40, bottom: 120 },
    xAxis: { type: 'category', data: labels, axisLabel: { interval: 0, rotate: 60, fontSize: 8 } },
    yAxis: { type: 'value', name: 'gap %' },
    series: [
      {
        name: 'throughput gap',
        type: 'bar' as const,
        data: gaps,
        markArea: {
          silent: true,
          itemStyle: { color: 'rgba(145, 199, 174, 0.25)' },
          data: [[{ yAxis: 45, name: 'reference 45-70%' }, { yAxis: 70 }]],
        },
      },
    ],
  }
}

export function buildOption(spec: FigureSpec): Record<string, unknown> {
  if (spec.inputs.length === 0) throw new CsvError(`${spec.kind}: no input CSVs given`)
  switch (spec.kind) {
    case 'traffic':
      return trafficOption(spec)
    case 'latency_sla':
      return latencySlaOption(spec)
    case 'throughput':
      return throughputOption(spec)
    case 'gpu_util':
      return gpuUtilOption(spec)
    case 'comparison':
      return comparisonOption(spec)
  }
}
