//! Trace-time durations such as `4h` or `14d`.

const UNITS: [(&str, u64); 5] = [("s", 1), ("m", 60), ("h", 3_600), ("d", 86_400), ("w", 604_800)];

/// Parses `<integer><unit>` with unit `s`, `m`, `h`, `d` or `w` into
/// seconds. A bare integer is taken as seconds.
pub fn parse_duration(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let (digits, unit) = s.split_at(split);
    let n: u64 = digits.parse().map_err(|_| format!("invalid duration {s:?}"))?;
    let scale = if unit.is_empty() {
        1
    } else {
        UNITS
            .iter()
            .find(|(u, _)| *u == unit)
            .map(|&(_, f)| f)
            .ok_or_else(|| format!("unknown duration unit {unit:?} (use s, m, h, d or w)"))?
    };
    n.checked_mul(scale).ok_or_else(|| format!("duration {s:?} overflows"))
}
