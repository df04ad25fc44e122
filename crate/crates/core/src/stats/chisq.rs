use serde::{Deserialize, Serialize};

use super::special::chi_square_sf;
use super::{Result, StatsError};

/// Cells with an expected count below this are counted as low.
const LOW_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub table: Vec<Vec<u64>>,
    pub min_expected: f64,
    /// Cells with expected count in [1, 5).
    pub low_expected_cells: usize,
}

/// Pearson chi-square test of independence on an r x c table of counts,
/// without continuity correction.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<ChiSquareResult> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(StatsError::TooSmallTable);
    }
    let row_sums: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    if row_sums.contains(&0) || col_sums.contains(&0) {
        return Err(StatsError::DegenerateTable);
    }
    let total: f64 = row_sums.iter().sum::<u64>() as f64;

    let mut statistic = 0.0;
    let mut min_expected = f64::INFINITY;
    let mut low_expected_cells = 0;
    for (i, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = row_sums[i] as f64 * col_sums[j] as f64 / total;
            if expected < 1.0 {
                return Err(StatsError::ExpectedCountBelowFloor { row: i, col: j, expected });
            }
            if expected < LOW_EXPECTED {
                low_expected_cells += 1;
            }
            min_expected = min_expected.min(expected);
            let diff = obs as f64 - expected;
            statistic += diff * diff / expected;
        }
    }
    let dof = (rows - 1) * (cols - 1);
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
        table: table.to_vec(),
        min_expected,
        low_expected_cells,
    })
}
