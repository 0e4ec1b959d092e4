use crate::line_model::{LineConfig, Minute};
use crate::simulator::Timetable;
use crate::{Error, Result};

/// One bit per service minute `service_start..=service_end`; both endpoints are set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    start: Minute,
    bits: Vec<bool>,
}

impl Chromosome {
    /// Chromosome with only the endpoints set.
    pub fn endpoints(line: &LineConfig) -> Self {
        let mut bits = vec![false; line.window() as usize + 1];
        bits[0] = true;
        *bits.last_mut().expect("non-empty window") = true;
        Self {
            start: line.service_start,
            bits,
        }
    }

    /// Bits for the given departures; endpoints are forced on.
    pub fn from_departures(line: &LineConfig, departures: &[Minute]) -> Result<Self> {
        let mut c = Self::endpoints(line);
        for &m in departures {
            if m < line.service_start || m > line.service_end {
                return Err(Error::Timetable(format!(
                    "departure {m} outside the service window"
                )));
            }
            c.bits[(m - line.service_start) as usize] = true;
        }
        Ok(c)
    }

    pub fn from_bits(line: &LineConfig, mut bits: Vec<bool>) -> Result<Self> {
        if bits.len() != line.window() as usize + 1 {
            return Err(Error::Timetable(format!(
                "chromosome has {} bits, window needs {}",
                bits.len(),
                line.window() + 1
            )));
        }
        bits[0] = true;
        *bits.last_mut().expect("non-empty") = true;
        Ok(Self {
            start: line.service_start,
            bits,
        })
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub(crate) fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn departures(&self) -> Vec<Minute> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.start + i as Minute)
            .collect()
    }

    pub fn to_timetable(&self) -> Timetable {
        Timetable::new(self.departures()).expect("bit positions are strictly increasing")
    }

    /// Forces the endpoints back on after a variation operator.
    pub(crate) fn pin_endpoints(&mut self) {
        self.bits[0] = true;
        let n = self.bits.len();
        self.bits[n - 1] = true;
    }
}

/// Greedy left-to-right repair.
///
/// Walking the departures in order: a departure closer than `T_min` to the
/// previous kept one is deleted (the terminal departure is never deleted and
/// its gap is exempt from `T_min`); a gap wider than `T_max` is split by
/// inserting a departure at the midpoint, clamped into `[T_min, T_max]` from
/// the previous departure, until it fits. Idempotent on feasible input.
pub fn repair(chrom: &Chromosome, line: &LineConfig) -> Chromosome {
    let (lo, hi) = (line.min_interval, line.max_interval);
    let deps = chrom.departures();
    let end = line.service_end;
    let mut out = Chromosome::endpoints(line);
    let mut last = line.service_start;
    for &d in deps.iter().skip(1) {
        if d != end && d - last < lo {
            continue;
        }
        while d - last > hi {
            let step = ((d - last) / 2).clamp(lo, hi);
            last += step;
            out.bits[(last - line.service_start) as usize] = true;
        }
        if d != end && d - last < lo {
            continue;
        }
        out.bits[(d - line.service_start) as usize] = true;
        last = d;
    }
    out
}
