use super::SimError;
use crate::instrument::Channel;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Physical source of a detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Origin {
    Pair,
    Thermal,
    Raman,
    Dark,
}

impl Origin {
    pub const ALL: [Origin; 4] = [Origin::Pair, Origin::Thermal, Origin::Raman, Origin::Dark];

    pub fn label(self) -> &'static str {
        match self {
            Origin::Pair => "pair",
            Origin::Thermal => "thermal",
            Origin::Raman => "raman",
            Origin::Dark => "dark",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Origin::ALL.into_iter().find(|o| o.label() == s)
    }
}

fn parse_channel(s: &str) -> Option<Channel> {
    Channel::BOTH.into_iter().find(|c| c.label() == s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// s
    pub time: f64,
    pub channel: Channel,
    pub origin: Origin,
}

/// Detection events ordered by time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventStream {
    events: Vec<Event>,
    /// s
    pub duration: f64,
}

impl EventStream {
    /// Sorts by time; ties keep insertion order.
    pub fn from_events(mut events: Vec<Event>, duration: f64) -> Self {
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Self { events, duration }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn times(&self, channel: Channel) -> Vec<f64> {
        self.events.iter().filter(|e| e.channel == channel).map(|e| e.time).collect()
    }

    pub fn count(&self, channel: Channel, origin: Option<Origin>) -> usize {
        self.events.iter().filter(|e| e.channel == channel && origin.is_none_or(|o| e.origin == o)).count()
    }

    /// Appends a later batch, shifting its times by the current duration.
    pub fn append_shifted(&mut self, other: &EventStream) {
        let offset = self.duration;
        self.events.extend(other.events.iter().map(|e| Event { time: e.time + offset, ..*e }));
        self.duration += other.duration;
    }

    /// `time_s,channel,origin` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time_s", "channel", "origin"])?;
        for e in &self.events {
            w.write_record([format!("{:.16e}", e.time).as_str(), e.channel.label(), e.origin.label()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, duration: f64) -> Result<Self, SimError> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut events = Vec::new();
        for row in r.records() {
            let row = row?;
            let bad = || SimError::Config(format!("bad event row {:?}", row));
            let time: f64 = row.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let channel = row.get(1).and_then(parse_channel).ok_or_else(bad)?;
            let origin = row.get(2).and_then(Origin::parse).ok_or_else(bad)?;
            events.push(Event { time, channel, origin });
        }
        Ok(Self::from_events(events, duration))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let s = EventStream::from_events(
            vec![
                Event { time: 0.3, channel: Channel::AntiStokes, origin: Origin::Dark },
                Event { time: 1.0 / 3.0, channel: Channel::Stokes, origin: Origin::Pair },
                Event { time: 1e-9 * std::f64::consts::PI, channel: Channel::Stokes, origin: Origin::Thermal },
            ],
            1.0,
        );
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time_s,channel,origin\n"));
        let back = EventStream::read_csv(buf.as_slice(), 1.0).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn append_shifts_times() {
        let a =
            EventStream::from_events(vec![Event { time: 0.5, channel: Channel::Stokes, origin: Origin::Dark }], 1.0);
        let mut total = a.clone();
        total.append_shifted(&a);
        assert_eq!(total.times(Channel::Stokes), vec![0.5, 1.5]);
        assert_eq!(total.duration, 2.0);
    }
}
