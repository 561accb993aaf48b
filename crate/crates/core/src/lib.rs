//! LSH-based maximum inner product search with norm-range partitioning.
//!
//! Four meta algorithms (L2-ALSH, Sign-ALSH, Simple-LSH, Cross-LSH) reduce
//! inner-product search to angular or Euclidean search. A
//! [`NormRangeIndex`] splits the dataset by item norm, runs the chosen meta
//! algorithm per part with that part's own normalization factor, and ranks
//! buckets of all parts on a common inner-product estimate.
//!
//! ```
//! use nrmips::{answer_query, Dataset, IndexConfig, MetaAlgorithm, NormRangeIndex};
//!
//! let ds = Dataset::from_rows(&[[1.0, 0.0], [0.0, 2.0], [0.5, 0.5], [-1.0, 0.2]]).unwrap();
//! let cfg = IndexConfig::new(MetaAlgorithm::SimpleLsh, 2, 8, 7);
//! let index = NormRangeIndex::build(&ds, cfg).unwrap();
//! let ans = answer_query(&index, &ds, &[0.0, 1.0], 4, 1).unwrap();
//! assert_eq!(ans.top_k[0].id, 1);
//! ```

pub mod algorithm;
pub mod harness;
pub mod hash;
pub mod index;
pub mod query;
pub mod rho;
pub mod transform;
pub mod vecdata;

pub use algorithm::MetaAlgorithm;
pub use hash::{HashCode, HashFamily};
pub use index::{BucketScore, IndexConfig, IndexError, NormRangeIndex, SubIndex};
pub use query::{
    answer_query, evaluate_recall_curve, generate_candidates, CandidateStream, QueryAnswer,
    RecallCurve,
};
pub use transform::AlshParams;
pub use vecdata::{brute_force_topk, Dataset, GroundTruth, ItemId, Neighbor, QuerySet};

/// Formats a float with 9 significant digits, switching to exponent notation
/// outside `[1e-5, 1e9)` like C's `%.9g`. The output parses back with
/// `str::parse::<f64>`.
pub fn fmt_float(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
