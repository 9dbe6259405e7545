use serde::Serialize;

/// Why a command stopped. Usage problems exit with 1, failed runs with 2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: "usage",
            message: message.into(),
        }
    }

    pub fn run(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.kind == "usage" {
            1
        } else {
            2
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<seqtomo::Error> for Failure {
    fn from(e: seqtomo::Error) -> Self {
        use seqtomo::Error;
        match e {
            Error::InvalidArgument(m) => Failure::usage(m),
            Error::DegenerateProjection { .. } => Failure::run("degenerate_projection", e.to_string()),
            Error::Json(_) => Failure::usage(e.to_string()),
            Error::Csv(_) | Error::Io(_) => Failure::run("io", e.to_string()),
        }
    }
}
