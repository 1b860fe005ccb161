// Just enough of the controlled language for client-side validation: how
// many objects a question's determiner demands, and the correction template.

const NUMBER_WORDS: Record<string, number> = {
  one: 1, two: 2, three: 3, four: 4, five: 5, six: 6,
  seven: 7, eight: 8, nine: 9, ten: 10, eleven: 11, twelve: 12,
};

function parseNumber(token: string | undefined): number | null {
  if (!token) return null;
  if (token in NUMBER_WORDS) return NUMBER_WORDS[token];
  return /^\d+$/.test(token) ? parseInt(token, 10) : null;
}

/**
 * Expected designation cardinality of a "show me ..." question, or null when
 * any nonempty selection is admissible (universals).
 */
export function expectedCount(utterance: string): number | null {
  const words = utterance.toLowerCase().replace(/^show me\s+/, "").split(/\s+/);
  const [first, second, third] = words;
  if (first === "a" || first === "an") return 1;
  if (first === "both") return 2;
  if (first === "the") {
    const n = parseNumber(second);
    return n ?? 1;
  }
  if (first === "exactly") return parseNumber(second);
  if (first === "at") return null; // at least / at most: bounded, not fixed
  if (first === "all" && second === "but") return null;
  if (first === "every" || first === "all") return null;
  const n = parseNumber(first);
  if (n !== null && second === "of" && third === "the") return n;
  return null;
}

/** True when a selection may be posted for the question. */
export function selectionValid(utterance: string, selected: number): boolean {
  const want = expectedCount(utterance);
  if (want === null) return selected >= 1;
  return selected === want;
}

/** Inline hint shown while the selection is not postable. */
export function selectionHint(utterance: string, selected: number): string | null {
  if (selectionValid(utterance, selected)) return null;
  const want = expectedCount(utterance);
  if (want === null) return "select at least one object";
  return `select exactly ${want} object${want === 1 ? "" : "s"} (${selected} selected)`;
}

/** Corrections must read: No. This is <a/an ...>. */
export function correctionTextValid(text: string): boolean {
  return /^no[.,]?\s+this\s+is\s+(a|an)\s+[a-z][a-z ]*[.]?$/i.test(text.trim());
}

export function correctionHint(): string {
  return 'corrections read: "No. This is a <description>."';
}
