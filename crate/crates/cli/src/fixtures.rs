//! The three reference artifacts: the sparse 6×16 Steiner ETF, its 6×16 Kirkman
//! transform, and the 6×32 self-complementary code.

use anyhow::Result;
use clap::ValueEnum;

use etfkit_core::codes::frame_to_code;
use etfkit_core::designs::round_robin_design;
use etfkit_core::flatmat::{drop_row_simplex, hadamard};
use etfkit_core::frames::{kirkman_etf, steiner_etf, Frame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Fig1,
    Fig2,
    Fig3,
}

fn steiner() -> Result<Frame> {
    let design = round_robin_design(4)?;
    Ok(steiner_etf(&design, &drop_row_simplex(&hadamard(4)?, 0)?)?)
}

fn kirkman() -> Result<Frame> {
    let design = round_robin_design(4)?;
    Ok(kirkman_etf(&design, &drop_row_simplex(&hadamard(4)?, 0)?, &hadamard(2)?)?)
}

pub fn emit(which: Which) -> Result<String> {
    Ok(match which {
        Which::Fig1 => format!("{}\n", steiner()?.to_json()),
        Which::Fig2 => format!("{}\n", kirkman()?.to_json()),
        Which::Fig3 => frame_to_code(&kirkman()?)?.to_text(),
    })
}
