import { mkdirSync, writeFileSync } from 'fs'
import { dirname } from 'path'

import * as echarts from 'echarts'

import { FigureSpec, buildOption } from './figures.js'

/**
 * zrender numbers its CSS classes with process-global counters, so the raw
 * SVG differs between runs that rendered other charts first. Renaming classes
 * by first appearance makes identical inputs give byte-identical files.
 */
function normalizeClasses(svg: string): string {
  const mapping = new Map<string, string>()
  return svg.replace(/zr\d+-cls-\d+/g, (match) => {
    let name = mapping.get(match)
    if (name === undefined) {
      name = `zr-cls-${mapping.size}`
      mapping.set(match, name)
    }
    return name
  })
}

/** Render one figure spec to an SVG file; returns the SVG string. */
export function render(spec: FigureSpec): string {
  const option = buildOption(spec)
  const chart = echarts.init(null, undefined, {
    renderer: 'svg',
    ssr: true,
    width: spec.width ?? 900,
    height: spec.height ?? (spec.kind === 'latency_sla' ? 460 : 420),
  })
  try {
    chart.setOption(option as echarts.EChartsOption)
    const svg = normalizeClasses(chart.renderToSVGString())
    mkdirSync(dirname(spec.out), { recursive: true })
    writeFileSync(spec.out, svg)
    return svg
  } finally {
    chart.dispose()
  }
}
