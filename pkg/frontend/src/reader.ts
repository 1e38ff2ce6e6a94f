/** Reader-side anchoring.

The service stores text spans as Unicode codepoint offsets while DOM
selections report UTF-16 code unit offsets, so the text reader converts
between the two.  The paged reader converts pixel rectangles on a rendered
page to normalized page regions and back; regions are quantized to four
decimals so a render/reselect cycle reproduces the anchor exactly.
*/

import type { PageDto, PageRegionAnchor, TextSpanAnchor } from "./types.js";

function isHighSurrogate(unit: number): boolean {
  return unit >= 0xd800 && unit <= 0xdbff;
}

function isLowSurrogate(unit: number): boolean {
  return unit >= 0xdc00 && unit <= 0xdfff;
}

/** Codepoint offset for a UTF-16 offset; offsets inside a surrogate pair
snap back to the pair start. */
export function utf16ToCodepoint(text: string, utf16: number): number {
  const clamped = Math.max(0, Math.min(text.length, Math.floor(utf16)));
  let cp = 0;
  let unit = 0;
  while (unit < clamped) {
    const code = text.charCodeAt(unit);
    if (
      isHighSurrogate(code) &&
      unit + 1 < text.length &&
      isLowSurrogate(text.charCodeAt(unit + 1))
    ) {
      if (unit + 1 === clamped) break; // mid-pair: snap to pair start
      unit += 2;
    } else {
      unit += 1;
    }
    cp += 1;
  }
  return cp;
}

/** UTF-16 offset for a codepoint offset. */
export function codepointToUtf16(text: string, cp: number): number {
  let remaining = Math.max(0, Math.floor(cp));
  let unit = 0;
  while (remaining > 0 && unit < text.length) {
    const code = text.charCodeAt(unit);
    if (
      isHighSurrogate(code) &&
      unit + 1 < text.length &&
      isLowSurrogate(text.charCodeAt(unit + 1))
    ) {
      unit += 2;
    } else {
      unit += 1;
    }
    remaining -= 1;
  }
  return unit;
}

/** Codepoint length of a string. */
export function codepointLength(text: string): number {
  return utf16ToCodepoint(text, text.length);
}

export class TextReaderModel {
  readonly text: string;

  constructor(text: string) {
    this.text = text;
  }

  /** Anchor for a DOM selection given in UTF-16 offsets; null when empty. */
  anchorFromSelection(startUtf16: number, endUtf16: number): TextSpanAnchor | null {
    const a = utf16ToCodepoint(this.text, Math.min(startUtf16, endUtf16));
    const b = utf16ToCodepoint(this.text, Math.max(startUtf16, endUtf16));
    if (a === b) return null;
    return { type: "text_span", start: a, end: b };
  }

  /** UTF-16 offsets to highlight for a stored anchor. */
  selectionFromAnchor(anchor: TextSpanAnchor): { start: number; end: number } {
    return {
      start: codepointToUtf16(this.text, anchor.start),
      end: codepointToUtf16(this.text, anchor.end),
    };
  }

  spanText(anchor: TextSpanAnchor): string {
    const { start, end } = this.selectionFromAnchor(anchor);
    return this.text.slice(start, end);
  }
}

export interface PixelRect {
  left: number;
  top: number;
  width: number;
  height: number;
}

/** Quantize to 4 decimals; idempotent, so reselecting a rendered region
reproduces the same anchor. */
export function round4(value: number): number {
  return Math.round(value * 10000) / 10000;
}

const MIN_EXTENT = 0.0001;

export class PagedReaderModel {
  readonly pages: PageDto[];

  constructor(pages: PageDto[]) {
    this.pages = pages;
  }

  pageCount(): number {
    return this.pages.length;
  }

  /** Normalized anchor for a pixel selection on a page rendered at
  renderedWidth x renderedHeight; null for degenerate or off-page drags. */
  anchorFromSelection(
    page: number,
    rect: PixelRect,
    renderedWidth: number,
    renderedHeight: number,
  ): PageRegionAnchor | null {
    if (!Number.isInteger(page) || page < 0 || page >= this.pages.length) return null;
    if (renderedWidth <= 0 || renderedHeight <= 0) return null;
    if (rect.width <= 0 || rect.height <= 0) return null;
    let x = rect.left / renderedWidth;
    let y = rect.top / renderedHeight;
    let w = rect.width / renderedWidth;
    let h = rect.height / renderedHeight;
    x = Math.max(0, Math.min(1, x));
    y = Math.max(0, Math.min(1, y));
    w = Math.min(w, 1 - x);
    h = Math.min(h, 1 - y);
    x = round4(x);
    y = round4(y);
    w = Math.max(MIN_EXTENT, round4(w));
    h = Math.max(MIN_EXTENT, round4(h));
    if (x + w > 1) x = round4(1 - w);
    if (y + h > 1) y = round4(1 - h);
    return { type: "page_region", page, x, y, w, h };
  }

  /** Pixel rectangle to draw for a stored anchor at the given render size. */
  rectFromAnchor(
    anchor: PageRegionAnchor,
    renderedWidth: number,
    renderedHeight: number,
  ): PixelRect {
    return {
      left: anchor.x * renderedWidth,
      top: anchor.y * renderedHeight,
      width: anchor.w * renderedWidth,
      height: anchor.h * renderedHeight,
    };
  }
}
