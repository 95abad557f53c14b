//! Cross-entropy-difference selection from a mixed pool, first at a fixed
//! fraction and then with a batch-size line search on an in-domain dev set.
//!
//! cargo run --example select_data

use cascade_slt::select::{
    extract_parallel, line_search_batch, score_ced, select_fraction, train_selection_models, LineSearchConfig,
};
use cascade_slt::synth::mixed_domain;

fn main() -> cascade_slt::Result<()> {
    let data = mixed_domain(5, 500, 1500);
    let (in_lm, out_lm) = train_selection_models(&data.in_domain_train, &data.pool, 2);
    let scored = score_ced(&in_lm, &out_lm, &data.pool);

    let purity = |picked: &[usize]| picked.iter().filter(|&&i| data.in_domain[i]).count() as f64 / picked.len() as f64;
    let base = data.in_domain.iter().filter(|&&b| b).count() as f64 / data.pool.len() as f64;
    println!("pool: {} sentences, {:.0}% in-domain", data.pool.len(), 100.0 * base);

    let top = select_fraction(&scored, 0.2)?;
    println!(
        "top 20%: {} sentences, {:.0}% in-domain",
        top.selected().len(),
        100.0 * purity(top.selected())
    );

    let grid = [100, 250, 400, 500, 600, 800, 1200, 2000];
    let search = line_search_batch(&scored, &data.dev, &grid, &LineSearchConfig::default())?;
    for (k, bits) in &search.batch_values {
        println!("  k = {k:>4}: dev cross-entropy {bits:.3} bits/word");
    }
    println!(
        "chosen batch {} ({:.0}% in-domain)",
        search.chosen,
        100.0 * purity(search.selected())
    );

    // a parallel corpus keeps target lines aligned with the selected sources
    let targets: Vec<String> = (0..data.pool.len()).map(|i| format!("target {i}")).collect();
    let picked = extract_parallel(&search, &targets)?;
    println!("first selected target lines: {:?}", &picked[..3]);
    Ok(())
}
