export { CsvError, parseCsv, readCsv, requireColumns } from './csv.js'
export { KINDS, buildOption, perSecondCounts } from './figures.js'
export type { FigureKind, FigureSpec } from './figures.js'
export { render } from './render.js'
