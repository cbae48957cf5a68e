"""Instruction template pools and canned auxiliary texts for the forge.

Each restoration task ships >= 20 task-specific paraphrases plus five
shared ambiguous "negative" prompts emitted with probability 0.1. The
five ambiguous strings are placeholders of our own (the originals were
never published). Object removal/creation instructions come in inverse
pairs so the back-translation swap is an involution.
"""

AMBIGUOUS_PROMPTS = (
    # placeholder negatives; see module docstring
    "fix this image",
    "make this image better",
    "improve the picture",
    "clean this up",
    "do something about this image",
)
AMBIGUOUS_PROBABILITY = 0.1

TASK_PROMPTS = {
    "lowlight": (
        "Brighten this dark image",
        "Enhance the low-light photo so details become visible",
        "Increase the exposure of this underexposed image",
        "Lighten the shadows and recover the scene",
        "Make this dim photo look like it was taken in daylight",
        "Fix the poor lighting in this picture",
        "Raise the brightness without washing out the colors",
        "Recover the details hidden in the darkness",
        "Correct the underexposure of this shot",
        "Turn this night-time looking photo into a well-lit one",
        "Illuminate the scene in this dark picture",
        "Boost the luminance of this image",
        "Remove the darkness and reveal the content",
        "Enhance visibility in this low-light capture",
        "Make the image brighter and reduce the noise",
        "Restore natural brightness to this photo",
        "Compensate for the insufficient lighting",
        "Bring out the subject from the dark background",
        "Adjust the image so it no longer looks underexposed",
        "Give this gloomy photo proper exposure",
    ),
    "haze": (
        "Improve the visibility of the image by reducing haze",
        "Remove the haze from this photo",
        "Dehaze this image",
        "Clear the fog obscuring the scene",
        "Make the hazy picture crisp and clear",
        "Cut through the atmospheric haze in this shot",
        "Restore contrast lost to the haze",
        "Eliminate the misty veil over the image",
        "Sharpen this photo by removing the fog",
        "Recover the true colors hidden behind the haze",
        "Clean the smoggy look off this picture",
        "Defog the image so distant objects are visible",
        "Strip away the haze layer from the scene",
        "Make the air in this photo look transparent",
        "Reduce the atmospheric scattering in the image",
        "Bring back clarity to this hazy landscape",
        "Remove the whitish veil covering the photo",
        "Enhance this image by clearing the mist",
        "Undo the hazy weather effect in the picture",
        "Give this foggy photograph a clear-day look",
    ),
    "snow": (
        "Remove the snow from this image",
        "Desnow this photo",
        "Clear the falling snowflakes from the picture",
        "Erase the snow speckles covering the scene",
        "Clean the snowfall off this image",
        "Remove the white flakes obscuring the photo",
        "Restore the scene hidden behind the snow",
        "Get rid of the snow streaks in this shot",
        "Make this snowy picture look snow-free",
        "Eliminate the snowflakes from the image",
        "Wipe the snow particles off the photo",
        "Remove the wintry speckle noise from the scene",
        "Undo the snowfall in this picture",
        "Take the falling snow out of the image",
        "Recover the clean view behind the snowflakes",
        "Remove all traces of snow from the photograph",
        "Clear away the snow covering parts of the scene",
        "Make the blizzard in this photo disappear",
        "Filter out the snow from this capture",
        "Restore this image to its snowless state",
    ),
    "watermark": (
        "Remove the watermark from this image",
        "Erase the watermark overlay",
        "Delete the semi-transparent watermark pattern",
        "Clean the watermark off this photo",
        "Get rid of the watermark covering the picture",
        "Strip the watermark from the image",
        "Remove the overlaid logo pattern",
        "Eliminate the watermark text from the photo",
        "Restore the image without its watermark",
        "Take out the watermark stamped on this picture",
        "Remove the tiled watermark pattern",
        "Clear the translucent marking from the image",
        "Erase the protective watermark from this photo",
        "Remove the branding overlay from the picture",
        "Make the watermark on this image disappear",
        "Clean up the watermarked regions of the photo",
        "Remove the repeating watermark across the image",
        "Undo the watermarking applied to this picture",
        "Recover the unmarked version of this image",
        "Extract the watermark from the photograph",
    ),
    "colorization": (
        "Colorize this grayscale image",
        "Add color to this black and white photo",
        "Turn this monochrome picture into a color one",
        "Restore natural colors to this grayscale image",
        "Bring this black and white photograph to life with color",
        "Convert the grayscale photo to full color",
        "Paint realistic colors onto this monochrome image",
        "Give this colorless picture natural hues",
        "Recover the colors of this desaturated photo",
        "Make this black and white image colorful",
        "Apply plausible colors to the grayscale scene",
        "Re-color this monochrome photograph",
        "Infuse this gray image with realistic color",
        "Transform the black and white shot into color",
        "Add lifelike color to this grayscale capture",
        "Restore the chromatic information of this image",
        "Color in this monochrome picture",
        "Produce a colored version of this grayscale photo",
        "Return the hues to this washed-out gray image",
        "Render this black and white scene in color",
    ),
    "superres": (
        "Increase the resolution of this image",
        "Upscale this low-resolution photo",
        "Enhance the resolution and sharpness of the picture",
        "Super-resolve this blocky image",
        "Make this pixelated photo sharp and detailed",
        "Improve the definition of this low-res image",
        "Recover fine details from this downsampled picture",
        "Sharpen and upscale the blurry low-resolution shot",
        "Turn this low-quality image into a high-resolution one",
        "Remove the pixelation and restore detail",
        "Reconstruct the high-resolution version of this photo",
        "Enhance this image to a crisper resolution",
        "Fix the blocky artifacts and increase detail",
        "Restore the sharpness lost to downsampling",
        "Give this coarse image a high-definition look",
        "Refine the resolution of this degraded picture",
        "Upsample this image with better detail",
        "Make the small details in this photo visible again",
        "De-pixelate this image",
        "Bring this soft, low-res photo into sharp focus",
    ),
}

# Inverse instruction pairs for the removal <-> creation back-translation
# swap; {object} is replaced by the composited object's name.
INVERSE_PAIRS = (
    ("Remove the {object} from the image", "Add a {object} to the image"),
    ("Erase the {object} from this photo", "Draw a {object} into this photo"),
    ("Delete the {object} from the scene", "Insert a {object} into the scene"),
    ("Take the {object} out of this picture", "Put a {object} into this picture"),
    ("Get rid of the {object} in the image", "Place a {object} in the image"),
    ("Make the {object} disappear from the photo", "Make a {object} appear in the photo"),
    ("Remove the {object} and fill in the background", "Paint a {object} over the background"),
    ("Clear the {object} from this shot", "Compose a {object} into this shot"),
    ("Eliminate the {object} from the picture", "Introduce a {object} to the picture"),
    ("Wipe the {object} out of the image", "Render a {object} in the image"),
    ("Cut the {object} from this photograph", "Overlay a {object} on this photograph"),
    ("Remove the unwanted {object}", "Add a new {object}"),
    ("Scrub the {object} from the frame", "Stamp a {object} onto the frame"),
    ("Take away the {object} in this image", "Bring a {object} into this image"),
    ("Drop the {object} from the scene", "Set a {object} in the scene"),
    ("Remove the {object} cleanly from the image", "Blend a {object} naturally into the image"),
    ("Erase every trace of the {object}", "Create a convincing {object}"),
    ("Remove the {object} near the center", "Add a {object} near the center"),
    ("Clear out the {object} from the view", "Work a {object} into the view"),
    ("Delete the {object} and restore the backdrop", "Draw a {object} over the backdrop"),
)

# Canned auxiliary texts: task tag -> (semantic caption, defect description).
PROVIDER_TABLE = {
    "lowlight": (
        "a softly shaped scene with muted shapes against a simple background",
        "the image is severely underexposed, very dark, and speckled with noise",
    ),
    "haze": (
        "an open scene with shapes receding toward the background",
        "a dense whitish haze washes out the contrast and hides distant detail",
    ),
    "snow": (
        "a simple scene with a few distinct shapes",
        "bright falling snow speckles obscure parts of the scene",
    ),
    "watermark": (
        "a clean scene with clear shapes and colors",
        "a semi-transparent tiled watermark pattern overlays the image",
    ),
    "colorization": (
        "a composition of a few simple shapes",
        "the image is grayscale and carries no color information",
    ),
    "superres": (
        "a scene with smooth regions and a few sharp edges",
        "the image is low resolution with blocky pixelation and lost detail",
    ),
    "removal": (
        "a scene containing an extra foreground object",
        "an unwanted object occludes part of the background",
    ),
    "creation": (
        "a scene with room for an additional foreground object",
        "the requested object is missing from the scene",
    ),
}
