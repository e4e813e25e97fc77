// Pure geometry for the arc diagram: which arcs to draw and how high.

export interface Arc {
  dep: number; // 0-based token index of the dependent
  head: number; // 0-based token index of the head
  from: number; // min(dep, head)
  to: number; // max(dep, head)
  level: number; // 1 = innermost
}

export interface ArcLayout {
  arcs: Arc[];
  roots: number[]; // 0-based indices of tokens attached to the artificial root
  unattached: number[]; // tokens with no head yet
  maxLevel: number;
}

/**
 * heads[i] is the 1-based head id of token i+1 (0 = root, null = unset).
 * Nested arcs stack: an arc strictly containing another sits one level above
 * it; arcs over the same span (a draft cycle of two) also stack.
 */
export function layoutArcs(heads: Array<number | null>): ArcLayout {
  const arcs: Arc[] = [];
  const roots: number[] = [];
  const unattached: number[] = [];
  heads.forEach((h, dep) => {
    if (h === null) {
      unattached.push(dep);
    } else if (h === 0) {
      roots.push(dep);
    } else {
      const head = h - 1;
      arcs.push({ dep, head, from: Math.min(dep, head), to: Math.max(dep, head), level: 0 });
    }
  });

  const bySpan = [...arcs].sort((a, b) => a.to - a.from - (b.to - b.from));
  for (const arc of bySpan) {
    let level = 1;
    for (const other of bySpan) {
      if (other === arc || other.level === 0) continue;
      const contained = other.from >= arc.from && other.to <= arc.to;
      if (contained) level = Math.max(level, other.level + 1);
    }
    arc.level = level;
  }

  const maxLevel = arcs.reduce((m, a) => Math.max(m, a.level), 0);
  return { arcs, roots, unattached, maxLevel };
}

export interface ArcPath {
  arc: Arc;
  path: string; // SVG path data
  labelX: number;
  labelY: number;
  arrowX: number; // where the arrowhead (at the dependent) sits
}

/** Token centers -> SVG paths; baseline is the y of the token row top. */
export function arcPaths(
  layout: ArcLayout,
  centers: number[],
  baseline: number,
  levelHeight = 28,
): ArcPath[] {
  return layout.arcs.map((arc) => {
    const x1 = centers[arc.head];
    const x2 = centers[arc.dep];
    const top = baseline - arc.level * levelHeight;
    const path = `M ${x1} ${baseline} C ${x1} ${top}, ${x2} ${top}, ${x2} ${baseline}`;
    return {
      arc,
      path,
      labelX: (x1 + x2) / 2,
      labelY: top + 11,
      arrowX: x2,
    };
  });
}
