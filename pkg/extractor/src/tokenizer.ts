/**
 * Tokenization for the toy attention model.
 *
 * Words are whitespace-separated, matching the convention of the
 * pipeline this package feeds: an importance file must carry exactly one
 * score per whitespace-level context token. Inside the model each word
 * is split further into fixed-width character pieces so that rare long
 * words share sub-patterns with common ones.
 */

/** Maximum characters per word piece. */
export const PIECE_WIDTH = 4;

/** Special sequence markers. */
export const CLS = "<cls>";
export const SEP = "<sep>";

/** Splits text into whitespace-level words, ignoring empty runs. */
export function words(text: string): string[] {
  return text.split(/\s+/).filter((w) => w.length > 0);
}

/** One word broken into pieces of at most PIECE_WIDTH characters. */
export function wordPieces(word: string): string[] {
  const pieces: string[] = [];
  for (let i = 0; i < word.length; i += PIECE_WIDTH) {
    pieces.push(word.slice(i, i + PIECE_WIDTH));
  }
  return pieces;
}

/** A model-ready sequence with piece-to-word alignment. */
export interface PieceSequence {
  /** Piece strings, including CLS and SEP markers. */
  pieces: string[];
  /**
   * For each piece, the index of the word it came from, or -1 for
   * markers. Word indices count whitespace-level words across the whole
   * word list passed in, in order.
   */
  wordIndex: number[];
}

/**
 * Builds the model input for a list of word groups (one group per
 * utterance). The sequence starts with CLS and each group is closed by
 * SEP. Word indices are global across groups.
 */
export function buildSequence(groups: string[][]): PieceSequence {
  const pieces: string[] = [CLS];
  const wordIndex: number[] = [-1];
  let w = 0;
  for (const group of groups) {
    for (const word of group) {
      for (const piece of wordPieces(word)) {
        pieces.push(piece);
        wordIndex.push(w);
      }
      w += 1;
    }
    pieces.push(SEP);
    wordIndex.push(-1);
  }
  return { pieces, wordIndex };
}
