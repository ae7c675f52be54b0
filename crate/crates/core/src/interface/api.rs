//! Transport-independent request handling shared by the HTTP service, the
//! command line and the C interface.

use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::generation::{generate_story, GenerationRequest, GenerationResponse};
use crate::model::Model;

/// Parses `body` as `T`. Syntax errors become `MalformedJson`; well-formed
/// JSON of the wrong shape becomes `InvalidRequest` at the offending path.
pub fn parse_json<T: DeserializeOwned>(body: &[u8]) -> Result<T> {
    let value: Value = serde_json::from_slice(body).map_err(|e| Error::MalformedJson(e.to_string()))?;
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::InvalidRequest {
            field: if path == "." { String::new() } else { path },
            reason: e.into_inner().to_string(),
        }
    })
}

pub fn generate(model: Option<&Model>, req: &GenerationRequest) -> Result<GenerationResponse> {
    let model = model.ok_or(Error::ModelNotLoaded)?;
    let valid = req.validate(&model.labels, model.net.config.max_chars)?;
    let story = generate_story(Some(model), &valid)?;
    Ok(GenerationResponse::new(model, &story, valid.seed))
}

/// Request bytes to response bytes.
pub fn generate_json(model: Option<&Model>, body: &[u8]) -> Result<Vec<u8>> {
    let req: GenerationRequest = parse_json(body)?;
    Ok(serde_json::to_vec(&generate(model, &req)?)?)
}

pub fn labels_json(model: &Model) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec(&model.labels)?)
}

/// HTTP status for an error raised while serving a request.
pub fn status_code(err: &Error) -> u16 {
    match err {
        Error::MalformedJson(_) => 400,
        Error::ModelNotLoaded => 503,
        Error::UnknownLabel(_)
        | Error::UnknownLabelAt { .. }
        | Error::ArcLengthMismatch { .. }
        | Error::InvalidRequest { .. }
        | Error::UnknownDecodeMode(_)
        | Error::EmptyInput(_)
        | Error::AllCharactersMasked => 422,
        _ => 500,
    }
}

/// `{"error": {"code", "message", "field"}}`.
pub fn error_body(err: &Error) -> Value {
    json!({
        "error": {
            "code": err.code(),
            "message": err.to_string(),
            "field": err.field(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_and_shape_errors_differ() {
        let e = parse_json::<GenerationRequest>(b"{not json").unwrap_err();
        assert_eq!((e.code(), status_code(&e)), ("MALFORMED_JSON", 400));
        let e = parse_json::<GenerationRequest>(br#"{"first_sentence": 3}"#).unwrap_err();
        assert_eq!((e.code(), status_code(&e)), ("INVALID_REQUEST", 422));
        assert_eq!(e.field(), Some("first_sentence"));
    }

    #[test]
    fn error_bodies_carry_codes() {
        let e = Error::ArcLengthMismatch {
            field: "plutchik_arcs[1]".into(),
            reason: "short".into(),
        };
        let v = error_body(&e);
        assert_eq!(v["error"]["code"], "ARC_LENGTH_MISMATCH");
        assert_eq!(v["error"]["field"], "plutchik_arcs[1]");
        assert_eq!(error_body(&Error::ModelNotLoaded)["error"]["field"], Value::Null);
    }

    #[test]
    fn no_model_means_unavailable() {
        let body = br#"{"first_sentence": "Hi.", "characters": ["a"], "plutchik_arcs": [["joy","joy","joy","joy"]]}"#;
        let e = generate_json(None, body).unwrap_err();
        assert_eq!(status_code(&e), 503);
    }
}
