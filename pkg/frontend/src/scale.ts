// The four-point relatedness scale plus the "Cannot decide" escape hatch.
// Rendering order is highest first, matching how the buttons are laid out.

export const CANNOT_DECIDE = 0;

export interface ScaleLevel {
  value: number;
  label: string;
}

export const SCALE: readonly ScaleLevel[] = [
  { value: 4, label: "Identical" },
  { value: 3, label: "Closely Related" },
  { value: 2, label: "Distantly Related" },
  { value: 1, label: "Unrelated" },
] as const;

export const VALID_LABELS: ReadonlySet<number> = new Set([CANNOT_DECIDE, 1, 2, 3, 4]);

export function scaleLabel(value: number): string {
  if (value === CANNOT_DECIDE) return "Cannot decide";
  const level = SCALE.find((s) => s.value === value);
  if (!level) throw new Error(`not a scale label: ${value}`);
  return level.label;
}

/** Split a context at a "start:end" span into left, target and right parts. */
export function splitContext(context: string, span: string): [string, string, string] {
  const match = /^(\d+):(\d+)$/.exec(span);
  if (!match) throw new Error(`malformed span ${JSON.stringify(span)}`);
  const start = Number(match[1]);
  const end = Number(match[2]);
  if (start > end || end > context.length) {
    throw new Error(`span ${span} out of bounds for context of length ${context.length}`);
  }
  return [context.slice(0, start), context.slice(start, end), context.slice(end)];
}
