//! JSON schemas for every JSON document the CLI writes.

pub const NAMES: [&str; 14] = [
    "design",
    "frame",
    "validation-report",
    "design-params",
    "etf-certificate",
    "match-report",
    "mcfarland-comparison",
    "real-kirkman-report",
    "spark-report",
    "rip-report",
    "steiner-rip-report",
    "code-check",
    "welch-bound",
    "grey-rankin-bound",
];

pub fn get(name: &str) -> Option<&'static str> {
    Some(match name {
        "design" => include_str!("../schemas/design.schema.json"),
        "frame" => include_str!("../schemas/frame.schema.json"),
        "validation-report" => include_str!("../schemas/validation-report.schema.json"),
        "design-params" => include_str!("../schemas/design-params.schema.json"),
        "etf-certificate" => include_str!("../schemas/etf-certificate.schema.json"),
        "match-report" => include_str!("../schemas/match-report.schema.json"),
        "mcfarland-comparison" => include_str!("../schemas/mcfarland-comparison.schema.json"),
        "real-kirkman-report" => include_str!("../schemas/real-kirkman-report.schema.json"),
        "spark-report" => include_str!("../schemas/spark-report.schema.json"),
        "rip-report" => include_str!("../schemas/rip-report.schema.json"),
        "steiner-rip-report" => include_str!("../schemas/steiner-rip-report.schema.json"),
        "code-check" => include_str!("../schemas/code-check.schema.json"),
        "welch-bound" => include_str!("../schemas/welch-bound.schema.json"),
        "grey-rankin-bound" => include_str!("../schemas/grey-rankin-bound.schema.json"),
        _ => return None,
    })
}
