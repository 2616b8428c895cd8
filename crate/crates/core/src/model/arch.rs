//! Architecture strings.
//!
//! Grammar (case-insensitive):
//!
//! ```text
//! arch  := conv+ block2d? istft? bands?
//! conv  := 'C' int        1D stage with ×int temporal upsampling
//! block2d := 'R' | 'S'    2D ResBlock / 2D ShuffleBlock trunk
//! istft := 'I' int        iSTFT output with ×int temporal upsampling
//! bands := 'B' int        multi-band output merged by PQMF
//! ```
//!
//! Without an `I` token the model emits the waveform directly (HiFi-GAN).
//! The product of all temporal factors and the band count must equal the
//! analysis hop length.

use std::fmt;
use std::str::FromStr;

use crate::blocks::{Block2dKind, SUPPORTED_FACTORS};
use crate::dsp::{istft_params, StftConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Conv1d { factor: usize },
    Blocks2d { kind: Block2dKind },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchSpec {
    pub stages: Vec<Stage>,
    /// iSTFT temporal upsampling; `None` for direct waveform output.
    pub istft_up: Option<usize>,
    pub bands: usize,
    pub base: StftConfig,
}

/// Named variants and their architecture strings.
pub const ALIASES: [(&str, &str); 7] = [
    ("hifigan-v2", "C8C8C2C2"),
    ("istftnet-c8c8i4", "C8C8I4"),
    ("istftnet-c8c1i32", "C8C1I32"),
    ("istftnet2-base", "C8RI32"),
    ("istftnet2-small", "C8SI32"),
    ("istftnet-mb", "C4C4I4B4"),
    ("istftnet2-mb", "C4SI16B4"),
];

impl ArchSpec {
    pub fn conv_factors(&self) -> impl Iterator<Item = usize> + '_ {
        self.stages.iter().filter_map(|s| match s {
            Stage::Conv1d { factor } => Some(*factor),
            Stage::Blocks2d { .. } => None,
        })
    }

    /// Neural temporal upsampling (product of the 1D stage factors).
    pub fn neural_upsampling(&self) -> usize {
        self.conv_factors().product()
    }

    pub fn block2d(&self) -> Option<Block2dKind> {
        self.stages.iter().find_map(|s| match s {
            Stage::Blocks2d { kind } => Some(*kind),
            Stage::Conv1d { .. } => None,
        })
    }

    /// Synthesis configuration of each band's iSTFT: the base configuration
    /// shrunk by neural upsampling × band count.
    pub fn istft_config(&self) -> Option<StftConfig> {
        self.istft_up?;
        Some(
            istft_params(&self.base, self.neural_upsampling() * self.bands)
                .expect("validated at construction"),
        )
    }

    /// Frequency bins the network has to produce per band.
    pub fn head_freq(&self) -> Option<usize> {
        self.istft_config().map(|c| c.freq_bins())
    }

    /// Checks the temporal budget and divisibility constraints.
    pub fn validate(&self) -> Result<()> {
        let conv_stages = self.conv_factors().count();
        if conv_stages == 0 {
            return Err(Error::Config(
                "architecture needs at least one 1D stage".into(),
            ));
        }
        if let Some(pos) = self
            .stages
            .iter()
            .position(|s| matches!(s, Stage::Blocks2d { .. }))
        {
            if pos != self.stages.len() - 1 {
                return Err(Error::Config("the 2D trunk must be the last stage".into()));
            }
            if self.istft_up.is_none() {
                return Err(Error::Config("a 2D trunk requires an iSTFT output".into()));
            }
        }
        for f in self.conv_factors() {
            if !SUPPORTED_FACTORS.contains(&f) {
                return Err(Error::Config(format!(
                    "unsupported 1D stage factor {f} (supported: {SUPPORTED_FACTORS:?})"
                )));
            }
        }
        if self.bands == 0 || self.istft_up == Some(0) {
            return Err(Error::Config(
                "band count and iSTFT factor must be positive".into(),
            ));
        }
        if self.bands > 1 && self.istft_up.is_none() {
            return Err(Error::Config(
                "multi-band output requires an iSTFT output".into(),
            ));
        }
        let total = self.neural_upsampling() * self.istft_up.unwrap_or(1) * self.bands;
        if total != self.base.hop() {
            return Err(Error::Budget {
                detail: "stage factors × iSTFT factor × bands".into(),
                got: total,
                expected: self.base.hop(),
            });
        }
        if self.istft_up.is_some() {
            let divisor = self.neural_upsampling() * self.bands;
            let cfg = istft_params(&self.base, divisor)?;
            cfg.check_nola()?;
        }
        Ok(())
    }

    /// Canonical alias, when this spec matches a named variant.
    pub fn alias(&self) -> Option<&'static str> {
        let canonical = self.to_string();
        ALIASES
            .iter()
            .find(|(_, s)| *s == canonical)
            .map(|(name, _)| *name)
    }
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for stage in &self.stages {
            match stage {
                Stage::Conv1d { factor } => write!(f, "C{factor}")?,
                Stage::Blocks2d {
                    kind: Block2dKind::Res,
                } => f.write_str("R")?,
                Stage::Blocks2d {
                    kind: Block2dKind::Shuffle,
                } => f.write_str("S")?,
            }
        }
        if let Some(up) = self.istft_up {
            write!(f, "I{up}")?;
        }
        if self.bands > 1 {
            write!(f, "B{}", self.bands)?;
        }
        Ok(())
    }
}

impl FromStr for ArchSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_arch(s)
    }
}

/// Parses an architecture string or named alias against the default
/// 1024/256/1024 analysis configuration.
pub fn parse_arch(input: &str) -> Result<ArchSpec> {
    parse_arch_with_base(input, StftConfig::default())
}

pub fn parse_arch_with_base(input: &str, base: StftConfig) -> Result<ArchSpec> {
    let trimmed = input.trim();
    let lower = trimmed.to_ascii_lowercase();
    let body = ALIASES
        .iter()
        .find(|(name, _)| *name == lower)
        .map_or(trimmed, |(_, s)| *s);

    let fail = |reason: String| Error::Parse {
        input: input.to_string(),
        reason,
    };

    let mut stages = Vec::new();
    let mut istft_up = None;
    let mut bands = None;
    let mut chars = body.chars().peekable();
    while let Some(c) = chars.next() {
        let token = c.to_ascii_uppercase();
        let mut digits = String::new();
        while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
            digits.push(*d);
            chars.next();
        }
        let number = || -> Result<usize> {
            if digits.is_empty() {
                return Err(fail(format!("'{token}' must be followed by a number")));
            }
            digits
                .parse()
                .map_err(|_| fail(format!("number {digits:?} out of range")))
        };
        match token {
            'C' | 'R' | 'S' if istft_up.is_some() || bands.is_some() => {
                return Err(fail(format!("'{token}' after the output tokens")));
            }
            'C' => stages.push(Stage::Conv1d { factor: number()? }),
            'R' | 'S' => {
                if !digits.is_empty() {
                    return Err(fail(format!("'{token}' takes no number")));
                }
                if stages.iter().any(|s| matches!(s, Stage::Blocks2d { .. })) {
                    return Err(fail("only one 2D trunk is allowed".into()));
                }
                let kind = if token == 'R' {
                    Block2dKind::Res
                } else {
                    Block2dKind::Shuffle
                };
                stages.push(Stage::Blocks2d { kind });
            }
            'I' if istft_up.is_none() && bands.is_none() => istft_up = Some(number()?),
            'B' if bands.is_none() => bands = Some(number()?),
            other => return Err(fail(format!("unexpected token '{other}'"))),
        }
    }
    if stages.is_empty() {
        return Err(fail("no 1D stages".into()));
    }
    if !matches!(stages[0], Stage::Conv1d { .. }) {
        return Err(fail("must start with a 1D stage".into()));
    }
    let spec = ArchSpec {
        stages,
        istft_up,
        bands: bands.unwrap_or(1),
        base,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factors(s: &ArchSpec) -> Vec<usize> {
        s.conv_factors().collect()
    }

    #[test]
    fn alias_strings() {
        let s = parse_arch("C8C8I4").unwrap();
        assert_eq!((factors(&s), s.istft_up, s.bands), (vec![8, 8], Some(4), 1));
        let s = parse_arch("C8C1I32").unwrap();
        assert_eq!(
            (factors(&s), s.istft_up, s.bands),
            (vec![8, 1], Some(32), 1)
        );
        let s = parse_arch("C4C4I4B4").unwrap();
        assert_eq!((factors(&s), s.istft_up, s.bands), (vec![4, 4], Some(4), 4));
    }

    #[test]
    fn budget_violation() {
        assert!(matches!(
            parse_arch("C8C8I8"),
            Err(Error::Budget {
                got: 512,
                expected: 256,
                ..
            })
        ));
        assert!(matches!(
            parse_arch("C8C8"),
            Err(Error::Budget { got: 64, .. })
        ));
    }

    #[test]
    fn aliases_round_trip() {
        for (name, body) in ALIASES {
            let spec = parse_arch(name).unwrap();
            assert_eq!(spec.to_string(), body);
            assert_eq!(spec.alias(), Some(name));
            assert_eq!(parse_arch(body).unwrap(), spec);
        }
        assert_eq!(
            parse_arch("ISTFTNet2-Small").unwrap().block2d(),
            Some(Block2dKind::Shuffle)
        );
    }

    #[test]
    fn head_frequencies() {
        let f = |s: &str| parse_arch(s).unwrap().head_freq();
        assert_eq!(f("istftnet-c8c8i4"), Some(9));
        assert_eq!(f("istftnet2-base"), Some(65));
        assert_eq!(f("istftnet-mb"), Some(9));
        assert_eq!(f("istftnet2-mb"), Some(33));
        assert_eq!(f("hifigan-v2"), None);
    }

    #[test]
    fn multiband_istft_config() {
        let cfg = parse_arch("istftnet2-mb").unwrap().istft_config().unwrap();
        assert_eq!((cfg.fft_size(), cfg.hop(), cfg.win_length()), (64, 16, 64));
    }

    #[test]
    fn malformed() {
        for bad in [
            "",
            "I4",
            "C",
            "CxI4",
            "C8C8I4X",
            "C8I4C8",
            "C8SSI32",
            "SC8I32",
            "C8S2I32",
            "C8SC4I8",
            "C3C3I",
            "C8C8I4I4",
            "C8C8C2C2B4",
            "C16C16",
            "C8C8I4B1B1",
            "C8SI32B",
        ] {
            assert!(parse_arch(bad).is_err(), "{bad:?} should be rejected");
        }
    }
}
