//! JSON Schemas for every response body the service returns.

pub const ERROR: &str = include_str!("../schemas/error.schema.json");
pub const SESSION_CREATED: &str = include_str!("../schemas/session_created.schema.json");
pub const TRANSCRIPT: &str = include_str!("../schemas/transcript.schema.json");
pub const MESSAGE_REPLY: &str = include_str!("../schemas/message_reply.schema.json");
pub const FREQUENCY_REPORT: &str = include_str!("../schemas/frequency_report.schema.json");
pub const SESSION_REPORT: &str = include_str!("../schemas/session_report.schema.json");
pub const HEALTH: &str = include_str!("../schemas/health.schema.json");

pub const ALL: &[(&str, &str)] = &[
    ("error", ERROR),
    ("session_created", SESSION_CREATED),
    ("transcript", TRANSCRIPT),
    ("message_reply", MESSAGE_REPLY),
    ("frequency_report", FREQUENCY_REPORT),
    ("session_report", SESSION_REPORT),
    ("health", HEALTH),
];

pub fn by_name(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
