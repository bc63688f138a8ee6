/**
 * Minimal CSV reading for swapsim outputs.
 *
 * The simulator writes plain comma-separated rows (model names are validated
 * comma-free on the other side), so no quoting support is needed here.
 */

import { readFileSync } from 'fs'

export type Row = Record<string, string>

export class CsvError extends Error {}

export function parseCsv(text: string, path = '<string>'): Row[] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0)
  if (lines.length === 0) throw new CsvError(`${path}: empty file`)
  const header = lines[0].split(',')
  const rows: Row[] = []
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(',')
    if (parts.length !== header.length) {
      throw new CsvError(`${path}:${i + 1}: expected ${header.length} fields, got ${parts.length}`)
    }
    const row: Row = {}
    for (let j = 0; j < header.length; j++) row[header[j]] = parts[j]
    rows.push(row)
  }
  return rows
}

export function readCsv(path: string): Row[] {
  return parseCsv(readFileSync(path, 'utf8'), path)
}

/** Ensure every named column exists; the error names the first missing one. */
export function requireColumns(rows: Row[], columns: string[], path: string): void {
  if (rows.length === 0) throw new CsvError(`${path}: no data rows`)
  for (const column of columns) {
    if (!(column in rows[0])) throw new CsvError(`${path}: missing column '${column}'`)
  }
}

export function numeric(row: Row, column: string): number {
  const value = Number(row[column])
  if (Number.isNaN(value)) throw new CsvError(`column '${column}': not numeric: '${row[column]}'`)
  return value
}

/** Average of `column` over rows, grouped by the given key columns. */
export function groupMean(rows: Row[], keys: string[], column: string): Map<string, number> {
  const sums = new Map<string, { total: number; count: number }>()
  for (const row of rows) {
    const key = keys.map((k) => row[k]).join('|')
    const entry = sums.get(key) ?? { total: 0, count: 0 }
    entry.total += numeric(row, column)
    entry.count += 1
    sums.set(key, entry)
  }
  return new Map([...sums].map(([k, { total, count }]) => [k, total / count]))
}
