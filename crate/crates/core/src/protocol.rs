//! Line-delimited JSON messages exchanged with external generators and
//! scorers.
//!
//! ```text
//! -> {"type":"generate","input":"<query> [SEP] <document>","max_terms":10}
//! <- {"type":"terms","terms":[{"term":"cat","score":1.5}]}
//! -> {"type":"score","query":"...","docs":[{"id":"d1","text":"..."}]}
//! <- {"type":"scores","scores":[{"id":"d1","score":0.7}]}
//! <- {"type":"error","message":"..."}
//! ```
//!
//! Each message is a single line. Over HTTP the same bodies are POSTed to
//! `/generate` or `/score`.

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separator placed between the query and the document in generator input.
pub const SEP: &str = "[SEP]";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Request {
    Generate { input: String, max_terms: usize },
    Score { query: String, docs: Vec<ScoreDoc> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Response {
    Terms { terms: Vec<TermScore> },
    Scores { scores: Vec<DocScore> },
    Error { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermScore {
    pub term: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreDoc {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocScore {
    pub id: String,
    pub score: f64,
}

/// Serialize to a single JSON line without the trailing newline.
pub fn encode<T: Serialize>(msg: &T) -> String {
    // Every message type serializes infallibly: string keys, finite floats
    // are the caller's responsibility and non-finite ones become `null`.
    serde_json::to_string(msg).expect("protocol messages serialize")
}

fn decode<T: DeserializeOwned>(line: &str) -> Result<T> {
    let trimmed = line.trim_end_matches(['\n', '\r']);
    serde_json::from_str(trimmed).map_err(|e| Error::protocol(e.to_string(), line))
}

pub fn decode_request(line: &str) -> Result<Request> {
    decode(line)
}

pub fn decode_response(line: &str) -> Result<Response> {
    decode(line)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wire_field_names() {
        let r = Request::Generate {
            input: "a [SEP] b".into(),
            max_terms: 3,
        };
        assert_eq!(
            encode(&r),
            r#"{"type":"generate","input":"a [SEP] b","max_terms":3}"#
        );
        let t = Response::Terms {
            terms: vec![TermScore {
                term: "x".into(),
                score: 1.5,
            }],
        };
        assert_eq!(encode(&t), r#"{"type":"terms","terms":[{"term":"x","score":1.5}]}"#);
        let s = Request::Score {
            query: "q".into(),
            docs: vec![ScoreDoc {
                id: "d".into(),
                text: "t".into(),
            }],
        };
        assert_eq!(
            encode(&s),
            r#"{"type":"score","query":"q","docs":[{"id":"d","text":"t"}]}"#
        );
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(decode_request(r#"{"type":"generate","input":"a","max_terms":1,"x":1}"#).is_err());
        assert!(decode_response(r#"{"type":"terms","terms":[{"term":"a","score":1,"y":0}]}"#).is_err());
        assert!(decode_response(r#"{"type":"bogus"}"#).is_err());
    }

    #[test]
    fn malformed_carries_raw_payload() {
        match decode_response("{\"type\":\"ter") {
            Err(Error::Protocol { raw, .. }) => assert_eq!(raw, "{\"type\":\"ter"),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn round_trip(input in "\\PC{0,40}", max_terms in 0usize..100,
                      terms in proptest::collection::vec(("[a-z]{1,8}", -1e6f64..1e6), 0..8)) {
            let req = Request::Generate { input, max_terms };
            prop_assert_eq!(decode_request(&encode(&req)).unwrap(), req);
            let resp = Response::Terms {
                terms: terms.into_iter().map(|(term, score)| TermScore { term, score }).collect(),
            };
            prop_assert_eq!(decode_response(&encode(&resp)).unwrap(), resp);
        }
    }
}
