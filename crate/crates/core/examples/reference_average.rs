//! Recompute a reference avg/total row from its per-label rows.
//!
//!     cargo run --example reference_average

use speechact::evaluate::{weighted_average, MetricsReport};
use speechact::MetricsRow;

const ROWS: [(&str, f64, f64, f64, f64); 11] = [
    ("apiAnswer", 0.93, 0.76, 0.83, 24.6),
    ("apiQuestion", 0.81, 0.66, 0.71, 17.2),
    ("clarifAnswer", 0.13, 0.07, 0.09, 6.0),
    ("clarifQuestion", 0.59, 0.41, 0.48, 32.6),
    ("confirmation", 0.88, 0.8, 0.83, 27.0),
    ("docAnswer", 0.25, 0.2, 0.22, 3.2),
    ("implQuestion", 0.52, 0.21, 0.28, 10.6),
    ("implStatement", 0.0, 0.0, 0.0, 3.0),
    ("introduction", 0.76, 0.6, 0.63, 4.0),
    ("stmnt", 0.69, 0.4, 0.51, 49.8),
    ("systemQuestion", 0.37, 0.22, 0.27, 4.8),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows: Vec<MetricsRow> = ROWS
        .iter()
        .map(|&(label, precision, recall, f_measure, support)| MetricsRow {
            label: label.into(),
            precision,
            recall,
            f_measure,
            support,
        })
        .collect();
    let avg = weighted_average(&rows)?;
    println!("{}", MetricsReport::from_rows(rows)?);
    println!(
        "unrounded: precision {:.4} recall {:.4} f-measure {:.4} support {:.3}",
        avg.precision, avg.recall, avg.f_measure, avg.support
    );
    Ok(())
}
