//! File formats and the command-line front end for `epifix-core`.

pub mod cli;
pub mod formats;

/// Data files shipped with the crate.
pub mod bundled {
    pub const FIG1_LEFT: &str = include_str!("../data/fig1_left.game");
    pub const FIG1_RIGHT: &str = include_str!("../data/fig1_right.game");
    pub const FIG2: &str = include_str!("../data/fig2.game");
    /// Common true belief of `gbr`-rationality implies `gbr`-elimination.
    pub const THM_MAIN: &str = include_str!("../data/THM-MAIN.prf");
    /// The same premise implies `lsd`-elimination, via the lemma `gbr -> lsd`.
    pub const THM_IMP: &str = include_str!("../data/THM-IMP.prf");
}
