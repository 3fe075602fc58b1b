use crate::config_io::table::Table;
use crate::error::{Error, Result};

pub const MIN_SAMPLE_RATE_HZ: f64 = 1000.0;

pub const LOG_COLUMNS: [&str; 9] =
    ["t_s", "q_deg", "omega_rad_s", "torque_nm", "torque_cmd_nm", "v_bus_v", "i_bus_a", "temp_motor_c", "temp_gear_c"];

/// Synchronized multichannel record. Header metadata (conditions, seed,
/// segment tables) travels in `meta` as ordered key/value pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeriesLog {
    /// s, strictly increasing
    pub t: Vec<f64>,
    /// deg
    pub q: Vec<f64>,
    /// rad/s
    pub omega: Vec<f64>,
    /// Measured torque, Nm.
    pub torque: Vec<f64>,
    /// Commanded torque, Nm.
    pub torque_cmd: Vec<f64>,
    /// V
    pub v_bus: Vec<f64>,
    /// A
    pub i_bus: Vec<f64>,
    /// °C
    pub temp_motor: Vec<f64>,
    /// °C
    pub temp_gear: Vec<f64>,
    /// Hz
    pub sample_rate: f64,
    pub meta: Vec<(String, String)>,
}

impl TimeSeriesLog {
    pub fn with_capacity(n: usize, sample_rate: f64) -> Self {
        let v = || Vec::with_capacity(n);
        TimeSeriesLog {
            t: v(),
            q: v(),
            omega: v(),
            torque: v(),
            torque_cmd: v(),
            v_bus: v(),
            i_bus: v(),
            temp_motor: v(),
            temp_gear: v(),
            sample_rate,
            meta: Vec::new(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        t: f64,
        q: f64,
        omega: f64,
        torque: f64,
        torque_cmd: f64,
        v_bus: f64,
        i_bus: f64,
        temp_motor: f64,
        temp_gear: f64,
    ) {
        self.t.push(t);
        self.q.push(q);
        self.omega.push(omega);
        self.torque.push(torque);
        self.torque_cmd.push(torque_cmd);
        self.v_bus.push(v_bus);
        self.i_bus.push(i_bus);
        self.temp_motor.push(temp_motor);
        self.temp_gear.push(temp_gear);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn span(&self) -> f64 {
        match (self.t.first(), self.t.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.meta.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.meta.push((key.to_string(), value)),
        }
    }

    pub fn channels(&self) -> [&Vec<f64>; 9] {
        [&self.t, &self.q, &self.omega, &self.torque, &self.torque_cmd, &self.v_bus, &self.i_bus, &self.temp_motor, &self.temp_gear]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        if self.channels().iter().any(|c| c.len() != n) {
            return Err(Error::Malformed("log channels differ in length".into()));
        }
        if !(self.sample_rate >= MIN_SAMPLE_RATE_HZ) {
            return Err(Error::LowSampleRate { sample_rate_hz: self.sample_rate });
        }
        if let Some(k) = self.t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Malformed(format!("time not strictly increasing at sample {}", k + 1)));
        }
        Ok(())
    }

    /// Index range `[start, end)` of samples with `t0 ≤ t < t1`.
    pub fn index_range(&self, t0: f64, t1: f64) -> (usize, usize) {
        (self.t.partition_point(|&t| t < t0), self.t.partition_point(|&t| t < t1))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table = Table::parse(text)?;
        table.expect_columns(&LOG_COLUMNS)?;
        let rate = match table.meta("sample_rate_hz") {
            Some(s) => s.parse::<f64>().map_err(|_| Error::Malformed(format!("bad sample_rate_hz `{s}`")))?,
            None => return Err(Error::Malformed("header lacks `sample_rate_hz`".into())),
        };
        let mut log = TimeSeriesLog::with_capacity(table.rows.len(), rate);
        log.meta = table.meta.into_iter().filter(|(k, _)| k != "sample_rate_hz").collect();
        for row in &table.rows {
            let mut v = [0.0; 9];
            for (k, name) in LOG_COLUMNS.iter().enumerate() {
                v[k] = row.f64(k, name)?;
            }
            log.push(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]);
        }
        log.validate()?;
        Ok(log)
    }

    pub fn to_text(&self) -> String {
        let mut table = Table::new(&LOG_COLUMNS);
        table.push_meta("sample_rate_hz", format!("{}", self.sample_rate));
        for (k, v) in &self.meta {
            table.push_meta(k, v.clone());
        }
        let ch = self.channels();
        for i in 0..self.len() {
            table.push_row(ch.iter().map(|c| format!("{}", c[i])).collect());
        }
        table.to_text()
    }
}
