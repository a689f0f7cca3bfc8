//! CSV tables. Floats are written with 17 significant digits so a value
//! read back is the same double.

use shellrg_core::{IntegrateError, Trajectory};
use shellrg_lab::DeviationSeries;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A table held in memory until the coordinator writes it.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Table { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("writing to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("writing to memory")
    }
}

/// Rows `t, n, re, im` for every shell at each sample time the run reached.
pub fn trajectory_csv(traj: &Trajectory, times: &[f64]) -> Result<Vec<u8>, IntegrateError> {
    let mut table = Table::new(&["t", "n", "re", "im"]);
    for &t in times.iter().filter(|&&t| t >= traj.t_start() && t <= traj.t_end()) {
        let state = traj.sample(t)?;
        for n in 1..=state.len() {
            let u = state.amplitude(n);
            table.row([float(t), n.to_string(), float(u.re), float(u.im)]);
        }
    }
    Ok(table.into_bytes())
}

/// Rows `t, n, re, im` with `n` the shell of each series.
pub fn series_csv(series: &[DeviationSeries]) -> Vec<u8> {
    let mut table = Table::new(&["t", "n", "re", "im"]);
    for s in series {
        for (t, v) in s.times.iter().zip(&s.values) {
            table.row([float(*t), s.shell.to_string(), float(v.re), float(v.im)]);
        }
    }
    table.into_bytes()
}

/// File-name-safe form of a family label such as `J=1,eps=1e-9`.
pub fn slug(label: &str) -> String {
    label
        .chars()
        .filter_map(|c| match c {
            '=' => None,
            ',' => Some('_'),
            c if c.is_ascii_alphanumeric() || c == '.' || c == '-' => Some(c),
            _ => Some('_'),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("J=1"), "J1");
        assert_eq!(slug("J=2,eps=1e-9"), "J2_eps1e-9");
        assert_eq!(slug("beta=0.5"), "beta0.5");
    }

    proptest! {
        #[test]
        fn floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let text = float(x);
            prop_assert_eq!(text.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let digits = text.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count();
            prop_assert_eq!(digits, 17);
        }
    }
}
