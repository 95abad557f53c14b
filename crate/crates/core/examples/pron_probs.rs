//! Pronunciation probabilities from aligned counts, with flooring for
//! dictionary variants that were never observed.
//!
//! cargo run --example pron_probs

use cascade_slt::corpus::{estimate_pronunciation_probs, parse_decode_lexicon, parse_pron_counts, write_pron_lexicon};

const COUNTS: &str = "\
either\tiy dh er\t30
either\tay dh er\t10
tomato\tt ah m ey t ow\t8
";

const LEXICON: &str = "\
either\tiy dh er
either\tay dh er
tomato\tt ah m ey t ow
tomato\tt ah m aa t ow
route\tr uw t
route\tr aw t
";

fn main() -> cascade_slt::Result<()> {
    let counts = parse_pron_counts(COUNTS.as_bytes())?;
    let lexicon = parse_decode_lexicon(LEXICON.as_bytes())?;
    let probs = estimate_pronunciation_probs(&counts, &lexicon, 0.01)?;
    print!("{}", write_pron_lexicon(&probs));
    Ok(())
}
